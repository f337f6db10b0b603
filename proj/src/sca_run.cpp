#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include "flmimo/sca.hpp"

namespace flmimo::sca {

namespace {

int barrier_terms(const cvx::SubproblemSpec& spec) {
  int m = static_cast<int>(spec.ineqs.size());
  for (int j = 0; j < spec.n; ++j) {
    if (spec.lo[j] > -cvx::kInf) ++m;
    if (spec.hi[j] < cvx::kInf) ++m;
  }
  return m;
}

// Returns a start for the freshly linearized subproblem at least `push`
// inside every constraint. The previous optimum usually sits on the boundary
// of the re-tightened surrogates; small blends toward a known interior
// anchor are tried first, then a phase-1 repair seeded at the optimum. The
// push distance shrinks with SCA progress so late iterations lose almost
// none of it.
std::vector<double> ensure_strict(const cvx::SubproblemSpec& spec,
                                  const std::vector<double>& x,
                                  const std::vector<double>& anchor, double push) {
  if (cvx::min_slack(spec, x) > push) return x;
  if (!anchor.empty()) {
    for (double theta : {0.01, 0.03}) {
      std::vector<double> cand(x.size());
      for (size_t i = 0; i < x.size(); ++i) {
        cand[i] = (1.0 - theta) * x[i] + theta * anchor[i];
      }
      if (cvx::min_slack(spec, cand) > push) return cand;
    }
  }
  auto p1 = cvx::phase1(spec, x, push);
  if (p1.feasible) return p1.x;
  if (!anchor.empty()) {
    for (double theta : {0.1, 0.3, 1.0}) {
      std::vector<double> cand(x.size());
      for (size_t i = 0; i < x.size(); ++i) {
        cand[i] = (1.0 - theta) * x[i] + theta * anchor[i];
      }
      if (cvx::min_slack(spec, cand) > 0.01 * push) return cand;
    }
  }
  p1 = cvx::phase1(spec, x, 1e-9);
  if (!p1.feasible) {
    throw InfeasibleError("sca: relinearized subproblem lost feasibility (phase-1 slack " +
                          std::to_string(p1.max_slack) + ")");
  }
  return p1.x;
}

// Progress-matched solver settings: the subproblem only needs to be solved
// to the accuracy SCA can exploit this iteration.
struct InnerPlan {
  double tol;
  double t_init;
  double push;
};

InnerPlan plan_inner(double delta_obj, double obj_scale, int m_barrier, double tol_floor) {
  InnerPlan p;
  const double rel = std::max(delta_obj / obj_scale, 1e-12);
  p.tol = std::clamp(0.3 * rel, tol_floor, 1e-3);
  p.t_init = m_barrier / std::max(delta_obj, tol_floor * obj_scale);
  p.push = std::min(1e-4, 1e-3 * delta_obj);
  return p;
}

bool debug_enabled() {
  static const bool on = std::getenv("FLMIMO_DEBUG") != nullptr;
  return on;
}

}  // namespace

SbResult run_algorithm1(const ChannelState& state, const NetworkConfig& config,
                        const PenaltyConfig& penalty, const ScaOptions& opts) {
  const SbVariables v0 = initial_point_sb(state, config, opts.seed);
  std::vector<double> x = pack_sb(v0, config);
  const std::vector<double> anchor = x;

  PenaltyConfig pen = penalty;
  ScaTrace trace;
  double prev_obj = std::numeric_limits<double>::infinity();
  double delta_obj = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool converged = false;

  for (int esc = 0; esc <= opts.max_lambda_escalations; ++esc) {
    converged = false;
    while (iter < opts.max_iter) {
      ++iter;
      const SbVariables cur = unpack_sb(x, config);
      BuildResult built;
      try {
        built = build_sb_subproblem(state, config, pen, cur);
      } catch (const std::domain_error& e) {
        throw InfeasibleError("algorithm1: degenerate iterate at iteration " +
                              std::to_string(iter) + ": " + e.what());
      }

      cvx::SolveOptions so;
      std::vector<double> start = x;
      if (std::isfinite(delta_obj)) {
        const double scale = 1.0 + std::abs(prev_obj);
        const InnerPlan ip =
            plan_inner(delta_obj, scale, barrier_terms(built.spec), opts.inner_tol);
        so.tol = ip.tol;
        so.t_init = ip.t_init;
        start = ensure_strict(built.spec, x, anchor, ip.push);
      } else {
        so.tol = opts.inner_tol_loose;
        start = ensure_strict(built.spec, x, anchor, 1e-6);
      }
      cvx::PrimalSolution sol;
      try {
        sol = cvx::solve(built.spec, start, so);
      } catch (const cvx::CvxError& e) {
        throw InfeasibleError("algorithm1: subproblem solve failed at iteration " +
                              std::to_string(iter) + ": " + e.what());
      }
      x = sol.x;

      const SbVariables nv = unpack_sb(x, config);
      const double obj = lagrangian_value(nv, config, pen);
      trace.objective.push_back(obj);
      trace.penalties.push_back(penalty_values(nv, config));
      if (debug_enabled()) {
        const auto& V = trace.penalties.back();
        std::fprintf(stderr, "[alg1] it=%d L=%.6g V=(%.2e %.2e %.2e %.2e) newton=%d\n", iter,
                     obj, V[0], V[1], V[2], V[3], sol.iterations);
      }
      delta_obj = std::abs(obj - prev_obj);
      if (delta_obj <= opts.tol * (1.0 + std::abs(obj))) {
        prev_obj = obj;
        converged = true;
        break;
      }
      prev_obj = obj;
    }

    const auto& v = trace.penalties.empty() ? std::array<double, 4>{} : trace.penalties.back();
    const bool penalties_ok = v[0] <= pen.epsilon && v[1] <= pen.epsilon &&
                              v[2] <= pen.epsilon && v[3] <= pen.epsilon;
    if (penalties_ok || esc == opts.max_lambda_escalations || iter >= opts.max_iter) {
      trace.termination = !converged ? "max_iter"
                          : penalties_ok ? "converged"
                                         : "converged_penalty_excess";
      break;
    }
    // Tighten the relaxation and warm-start from the current point.
    pen.lambda *= 10.0;
    prev_obj = std::numeric_limits<double>::infinity();
    delta_obj = std::numeric_limits<double>::infinity();
  }

  trace.iterations = iter;
  trace.lambda_final = pen.lambda;
  return {unpack_sb(x, config), trace};
}

SingleResult run_algorithm2(const ChannelState& state, const NetworkConfig& config,
                            SingleDesign design, const ScaOptions& opts) {
  SingleSessionVariables v0 = initial_point_single(state, config, design, opts.seed);
  std::vector<double> x = pack_single(v0, config);
  const std::vector<double> anchor = x;

  ScaTrace trace;
  double prev_obj = std::numeric_limits<double>::infinity();
  double delta_obj = std::numeric_limits<double>::infinity();
  int iter = 0;
  bool converged = false;

  while (iter < opts.max_iter) {
    ++iter;
    const SingleSessionVariables cur = unpack_single(x, config, design);
    BuildResult built;
    try {
      built = design == SingleDesign::kAsynchronous
                  ? build_asyn_subproblem(state, config, cur)
                  : build_syn_subproblem(state, config, cur);
    } catch (const std::domain_error& e) {
      throw InfeasibleError("algorithm2: degenerate iterate at iteration " +
                            std::to_string(iter) + ": " + e.what());
    }

    cvx::SolveOptions so;
    std::vector<double> start = x;
    if (std::isfinite(delta_obj)) {
      const double scale = 1.0 + std::abs(prev_obj);
      const InnerPlan ip =
          plan_inner(delta_obj, scale, barrier_terms(built.spec), opts.inner_tol);
      so.tol = ip.tol;
      so.t_init = ip.t_init;
      start = ensure_strict(built.spec, x, anchor, ip.push);
    } else {
      so.tol = opts.inner_tol_loose;
      start = ensure_strict(built.spec, x, anchor, 1e-6);
    }
    cvx::PrimalSolution sol;
    try {
      sol = cvx::solve(built.spec, start, so);
    } catch (const cvx::CvxError& e) {
      throw InfeasibleError("algorithm2: subproblem solve failed at iteration " +
                            std::to_string(iter) + ": " + e.what());
    }
    x = sol.x;
    trace.objective.push_back(sol.objective_value);
    trace.penalties.push_back({0, 0, 0, 0});
    if (debug_enabled()) {
      std::fprintf(stderr, "[alg2 %s] it=%d E=%.6g newton=%d\n",
                   design == SingleDesign::kAsynchronous ? "asyn" : "syn", iter,
                   sol.objective_value, sol.iterations);
    }
    delta_obj = std::abs(sol.objective_value - prev_obj);
    if (delta_obj <= opts.tol * (1.0 + std::abs(sol.objective_value))) {
      prev_obj = sol.objective_value;
      converged = true;
      break;
    }
    prev_obj = sol.objective_value;
  }

  trace.iterations = iter;
  trace.termination = converged ? "converged" : "max_iter";
  return {unpack_single(x, config, design), trace};
}

}  // namespace flmimo::sca
