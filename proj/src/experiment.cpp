#include "flmimo/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "flmimo/heur.hpp"
#include "flmimo/models.hpp"
#include "flmimo/netgen.hpp"

namespace flmimo::experiment {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kOptSb: return "OPT_SB";
    case Scheme::kOptAsyn: return "OPT_Asyn";
    case Scheme::kOptSyn: return "OPT_Syn";
    case Scheme::kHeuSb: return "HEU_SB";
    case Scheme::kHeuAsyn: return "HEU_Asyn";
    case Scheme::kHeuSyn: return "HEU_Syn";
  }
  return "?";
}

std::optional<Scheme> scheme_from_name(const std::string& name) {
  for (Scheme s : {Scheme::kOptSb, Scheme::kOptAsyn, Scheme::kOptSyn, Scheme::kHeuSb,
                   Scheme::kHeuAsyn, Scheme::kHeuSyn}) {
    if (name == scheme_name(s)) return s;
  }
  return std::nullopt;
}

namespace {

NetworkConfig apply_sweep(const NetworkConfig& base, SweepKind kind, double value) {
  NetworkConfig c = base;
  if (kind == SweepKind::kAntennas) {
    c.M = static_cast<int>(value);
  } else if (kind == SweepKind::kQos) {
    c.t_qos_s = value;
  }
  return c;
}

const char* sweep_param_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::kNone: return "none";
    case SweepKind::kAntennas: return "m";
    case SweepKind::kQos: return "qos";
  }
  return "?";
}

}  // namespace

void ExperimentPlan::validate() const {
  scenario.validate();
  if (schemes.empty()) throw std::invalid_argument("plan: no schemes selected");
  if (n_drops < 1) throw std::invalid_argument("plan: n_drops must be >= 1");
  if (sweep != SweepKind::kNone && values.empty()) {
    throw std::invalid_argument("plan: sweep requested without values");
  }
  for (double v : values) {
    apply_sweep(scenario, sweep, v).validate();
  }
}

std::string RunResult::csv() const {
  std::ostringstream os;
  os << "sweep_param,value,scheme,drop,e_dl,e_comp,e_ul,total,iters,feasible\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.10g,%s,%d,%.10g,%.10g,%.10g,%.10g,%d,%d\n",
                  r.sweep_param.c_str(), r.value, scheme_name(r.scheme), r.drop,
                  r.energy.e_dl, r.energy.e_comp, r.energy.e_ul, r.energy.total, r.iters,
                  r.feasible ? 1 : 0);
    os << buf;
  }
  return os.str();
}

namespace {

ResultRow run_one(const ExperimentPlan& plan, const NetworkConfig& config, double value,
                  Scheme scheme, int drop) {
  ResultRow row;
  row.sweep_param = sweep_param_name(plan.sweep);
  row.value = value;
  row.scheme = scheme;
  row.drop = drop;

  const std::uint64_t drop_seed = plan.seed + static_cast<std::uint64_t>(drop);
  try {
    const auto placement = netgen::place_ues(config, drop_seed);
    const auto state = netgen::build_channel_state(config, placement);
    sca::ScaOptions opts = plan.sca_opts;
    opts.seed = drop_seed;

    constexpr double kFeasTol = 1e-6;
    switch (scheme) {
      case Scheme::kOptSb: {
        auto res = sca::run_algorithm1(state, config, plan.penalty, opts);
        const auto polished = sca::binarize_and_polish(res.vars, state, config, opts.tol);
        row.energy = models::energy_sb(polished, state, config);
        row.iters = res.trace.iterations;
        row.feasible =
            models::validate_schedule_feasibility(polished, state, config).feasible(kFeasTol);
        break;
      }
      case Scheme::kOptAsyn:
      case Scheme::kOptSyn: {
        const auto design = scheme == Scheme::kOptAsyn ? SingleDesign::kAsynchronous
                                                       : SingleDesign::kSynchronous;
        auto res = sca::run_algorithm2(state, config, design, opts);
        row.energy = models::energy_single(res.vars, state, config);
        row.iters = res.trace.iterations;
        row.feasible =
            models::validate_schedule_feasibility(res.vars, state, config).feasible(kFeasTol);
        break;
      }
      case Scheme::kHeuSb: {
        const auto out = heur::heu_sb(state, config);
        if (!out.feasible()) {
          row.note = out.reason;
          return row;
        }
        row.energy = models::energy_sb(*out.vars, state, config);
        row.feasible =
            models::validate_schedule_feasibility(*out.vars, state, config).feasible(kFeasTol);
        break;
      }
      case Scheme::kHeuAsyn:
      case Scheme::kHeuSyn: {
        const auto out = scheme == Scheme::kHeuAsyn ? heur::heu_asyn(state, config)
                                                    : heur::heu_syn(state, config);
        if (!out.feasible()) {
          row.note = out.reason;
          return row;
        }
        row.energy = models::energy_single(*out.vars, state, config);
        row.feasible =
            models::validate_schedule_feasibility(*out.vars, state, config).feasible(kFeasTol);
        break;
      }
    }
  } catch (const std::exception& e) {
    row.note = e.what();
    row.feasible = false;
    row.energy = EnergyBreakdown{};
    row.iters = 0;
  }
  return row;
}

}  // namespace

RunResult run_plan(const ExperimentPlan& plan) {
  plan.validate();
  std::vector<double> values = plan.values;
  if (plan.sweep == SweepKind::kNone) values = {0.0};

  struct Task {
    NetworkConfig config;
    double value;
    Scheme scheme;
    int drop;
  };
  std::vector<Task> tasks;
  for (double v : values) {
    const NetworkConfig config = apply_sweep(plan.scenario, plan.sweep, v);
    for (Scheme s : plan.schemes) {
      for (int d = 0; d < plan.n_drops; ++d) tasks.push_back({config, v, s, d});
    }
  }

  RunResult out;
  out.rows.resize(tasks.size());
  std::atomic<size_t> next{0};
  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      out.rows[i] = run_one(plan, t.config, t.value, t.scheme, t.drop);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (const auto& r : out.rows) {
    if (!r.feasible) ++out.failures;
  }
  return out;
}

SizeReport report_problem_sizes(int K) {
  if (K < 1) throw std::invalid_argument("report_problem_sizes: K must be >= 1");
  SizeReport r;
  r.K = K;
  const long k = K;
  r.v_sb = 16 * k * k + 5 * k + 2;
  r.l_sb = 7 * k * k + 12 * k + 1;
  r.q_sb = 12 * k * k;
  r.v_asyn = 9 * k + 1;
  r.l_asyn = 11 * k + 1;
  r.q_asyn = 6 * k;
  r.v_syn = 7 * k + 4;
  r.l_syn = 7 * k + 2;
  r.q_syn = 7 * k;
  auto cx = [](long v, long l, long q) {
    return std::sqrt(static_cast<double>(l + q)) * static_cast<double>(v + l + q) *
           static_cast<double>(v) * static_cast<double>(v);
  };
  r.cx_sb = cx(r.v_sb, r.l_sb, r.q_sb);
  r.cx_asyn = cx(r.v_asyn, r.l_asyn, r.q_asyn);
  r.cx_syn = cx(r.v_syn, r.l_syn, r.q_syn);
  return r;
}

std::string SizeReport::text() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "K = %d\n"
                "session-based : vars %ld, linear %ld, quadratic %ld, complexity %.3e\n"
                "asynchronous  : vars %ld, linear %ld, quadratic %ld, complexity %.3e\n"
                "synchronous   : vars %ld, linear %ld, quadratic %ld, complexity %.3e\n",
                K, v_sb, l_sb, q_sb, cx_sb, v_asyn, l_asyn, q_asyn, cx_asyn, v_syn, l_syn,
                q_syn, cx_syn);
  return buf;
}

}  // namespace flmimo::experiment
