#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flmimo/models.hpp"
#include "flmimo/rng.hpp"
#include "flmimo/sca.hpp"

namespace flmimo::sca {

namespace {

cvx::AffForm unit(int i) {
  cvx::AffForm a;
  a.add(i, 1.0);
  return a;
}

}  // namespace

std::vector<double> pack_single(const SingleSessionVariables& vars,
                                const NetworkConfig& config) {
  const int K = vars.K();
  const SingleLayout L(K, vars.design);
  const Scaling sc = Scaling::from(config);
  std::vector<double> x(L.n(), 0.0);
  for (int k = 0; k < K; ++k) {
    x[L.eta(k)] = vars.eta[k];
    x[L.zeta(k)] = vars.zeta[k];
    x[L.r_d(k)] = vars.r_d[k] / sc.rate_unit_d;
    x[L.r_u(k)] = vars.r_u[k] / sc.rate_unit_u;
    x[L.f(k)] = vars.f[k] / sc.f_unit;
    x[L.omega_d(k)] = vars.omega_d[k] * sc.rate_unit_d;
    x[L.omega_u(k)] = vars.omega_u[k] * sc.rate_unit_u;
  }
  if (vars.design == SingleDesign::kAsynchronous) {
    x[L.q()] = vars.q;
    for (int k = 0; k < K; ++k) {
      x[L.q1(k)] = vars.q1[k];
      x[L.q2(k)] = vars.q2[k];
    }
  } else {
    x[L.t_d()] = vars.t_d;
    x[L.t_c()] = vars.t_c;
    x[L.t_u()] = vars.t_u;
  }
  return x;
}

SingleSessionVariables unpack_single(std::span<const double> x,
                                     const NetworkConfig& config, SingleDesign design) {
  const int K = config.K;
  const SingleLayout L(K, design);
  const Scaling sc = Scaling::from(config);
  SingleSessionVariables v;
  v.design = design;
  v.eta.resize(K);
  v.zeta.resize(K);
  v.r_d.resize(K);
  v.r_u.resize(K);
  v.f.resize(K);
  v.omega_d.resize(K);
  v.omega_u.resize(K);
  for (int k = 0; k < K; ++k) {
    v.eta[k] = x[L.eta(k)];
    v.zeta[k] = x[L.zeta(k)];
    v.r_d[k] = x[L.r_d(k)] * sc.rate_unit_d;
    v.r_u[k] = x[L.r_u(k)] * sc.rate_unit_u;
    v.f[k] = x[L.f(k)] * sc.f_unit;
    v.omega_d[k] = x[L.omega_d(k)] / sc.rate_unit_d;
    v.omega_u[k] = x[L.omega_u(k)] / sc.rate_unit_u;
  }
  if (design == SingleDesign::kAsynchronous) {
    v.q = x[L.q()];
    v.q1.resize(K);
    v.q2.resize(K);
    for (int k = 0; k < K; ++k) {
      v.q1[k] = x[L.q1(k)];
      v.q2[k] = x[L.q2(k)];
    }
  } else {
    v.t_d = x[L.t_d()];
    v.t_c = x[L.t_c()];
    v.t_u = x[L.t_u()];
  }
  return v;
}

namespace {

// Constraint families shared by the asynchronous and synchronous builders:
// boxes, the downlink power sum, the rate lower bounds, and the inverse-rate
// epigraph surrogates eta <= r * omega.
void build_single_common(const ChannelState& state, const NetworkConfig& config,
                         const SingleLayout& L, const std::vector<double>& x0,
                         cvx::SubproblemSpec& spec) {
  const int K = config.K;
  const Scaling sc = Scaling::from(config);
  const double ln2 = std::log(2.0);
  const double t_qos = config.t_qos_s;

  spec.n = L.n();
  spec.lo.assign(spec.n, 0.0);
  spec.hi.assign(spec.n, cvx::kInf);
  for (int k = 0; k < K; ++k) {
    spec.hi[L.eta(k)] = 1.0;
    spec.hi[L.zeta(k)] = 1.0;
    const double rcap_d =
        1.1 * std::log2(1.0 + (config.M - K) * config.rho_d * state.sigma2_dl_hat[k]);
    const double rcap_u =
        1.1 * std::log2(1.0 + (config.M - K) * config.rho_u * state.sigma2_ul_bar[k]);
    spec.hi[L.r_d(k)] = rcap_d;
    spec.hi[L.r_u(k)] = rcap_u;
    spec.hi[L.f(k)] = config.f_max / sc.f_unit;
    // omega plays 1/r; the payload-time products omega * s stay below the
    // QoS budget, which bounds omega by t_qos / s with margin.
    spec.hi[L.omega_d(k)] = 4.0 * t_qos / sc.s_d;
    spec.hi[L.omega_u(k)] = 4.0 * t_qos / sc.s_u;
  }

  {
    cvx::ConvexExpr e;  // sum_k eta - 1 <= 0
    for (int k = 0; k < K; ++k) e.affine.add(L.eta(k), 1.0);
    e.affine.b = -1.0;
    spec.ineqs.push_back(std::move(e));
  }

  for (int k = 0; k < K; ++k) {
    {
      RateBoundData d;
      d.pref = 1.0 / ln2;
      const double cu = (config.M - K) * config.rho_d * state.sigma2_dl_hat[k];
      d.u.add(L.eta(k), cu);
      d.u0 = cu * x0[L.eta(k)];
      const double cp = config.rho_d * (state.beta[k] - state.sigma2_dl_hat[k]);
      d.p.b = 1.0;
      double p0 = 1.0;
      for (int l = 0; l < K; ++l) {
        d.p.add(L.eta(l), cp);
        p0 += cp * x0[L.eta(l)];
      }
      d.p0 = p0;
      spec.ineqs.push_back(lower_bound_rate(d, L.r_d(k)));
    }
    {
      RateBoundData d;
      d.pref = 1.0 / ln2;
      const double cu = (config.M - K) * config.rho_u * state.sigma2_ul_bar[k];
      d.u.add(L.zeta(k), cu);
      d.u0 = cu * x0[L.zeta(k)];
      d.p.b = 1.0;
      double p0 = 1.0;
      for (int l = 0; l < K; ++l) {
        const double cl = config.rho_u * (state.beta[l] - state.sigma2_ul_bar[l]);
        d.p.add(L.zeta(l), cl);
        p0 += cl * x0[L.zeta(l)];
      }
      d.p0 = p0;
      spec.ineqs.push_back(lower_bound_rate(d, L.r_u(k)));
    }
    // eta - r_d omega_d <= 0 and zeta - r_u omega_u <= 0.
    spec.ineqs.push_back(bilinear_bounds(unit(L.r_d(k)), unit(L.omega_d(k)), unit(L.eta(k)),
                                         x0[L.r_d(k)], x0[L.omega_d(k)])
                             .z_minus_xy);
    spec.ineqs.push_back(bilinear_bounds(unit(L.r_u(k)), unit(L.omega_u(k)), unit(L.zeta(k)),
                                         x0[L.r_u(k)], x0[L.omega_u(k)])
                             .z_minus_xy);
  }

  // Objective: rho_d N0 S_d omega_d + computing + rho_u N0 S_u omega_u in
  // normalized units.
  cvx::ConvexExpr& obj = spec.objective;
  const double pd = config.rho_d * config.noise_w * sc.s_d;
  const double pu = config.rho_u * config.noise_w * sc.s_u;
  for (int k = 0; k < K; ++k) {
    obj.affine.add(L.omega_d(k), pd);
    obj.affine.add(L.omega_u(k), pu);
    const double kf = config.L * (config.alpha / 2.0) * config.c_cycles(k) *
                      config.d_samples(k) * sc.f_unit * sc.f_unit;
    obj.quads.push_back({unit(L.f(k)), kf});
  }
}

void check_iterate_positive(const SingleLayout& L, const std::vector<double>& x0, int K) {
  for (int k = 0; k < K; ++k) {
    if (!(x0[L.eta(k)] > 0) || !(x0[L.zeta(k)] > 0) || !(x0[L.f(k)] > 0) ||
        !(x0[L.r_d(k)] > 0) || !(x0[L.r_u(k)] > 0)) {
      throw std::domain_error("build_single: degenerate linearization point");
    }
  }
}

}  // namespace

BuildResult build_asyn_subproblem(const ChannelState& state, const NetworkConfig& config,
                                  const SingleSessionVariables& iterate) {
  const int K = config.K;
  const SingleLayout L(K, SingleDesign::kAsynchronous);
  const std::vector<double> x0 = pack_single(iterate, config);
  check_iterate_positive(L, x0, K);
  const Scaling sc = Scaling::from(config);
  const double t_qos = config.t_qos_s;

  cvx::SubproblemSpec spec;
  build_single_common(state, config, L, x0, spec);
  spec.hi[L.q()] = 2.0 * t_qos;
  for (int k = 0; k < K; ++k) {
    spec.hi[L.q1(k)] = t_qos;
    spec.hi[L.q2(k)] = t_qos;
  }

  for (int k = 0; k < K; ++k) {
    const double cpu = config.cycles(k) / sc.f_unit;
    {
      cvx::ConvexExpr e;  // s_d / r_d + cpu / f + s_u / r_u <= t_qos
      e.recips.push_back({unit(L.r_d(k)), sc.s_d});
      e.recips.push_back({unit(L.f(k)), cpu});
      e.recips.push_back({unit(L.r_u(k)), sc.s_u});
      e.affine.b = -t_qos;
      spec.ineqs.push_back(std::move(e));
    }
    {
      cvx::ConvexExpr e;  // s_d / r_d - q <= 0
      e.recips.push_back({unit(L.r_d(k)), sc.s_d});
      e.affine.add(L.q(), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    {
      cvx::ConvexExpr e;  // q - q1 - q2 <= 0
      e.affine.add(L.q(), 1.0);
      e.affine.add(L.q1(k), -1.0);
      e.affine.add(L.q2(k), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    {
      // q1 <= s_d (2/r0 - r/r0^2), the affine minorant of s_d / r_d.
      const auto [c0, c1] = reciprocal_bound(x0[L.r_d(k)]);
      cvx::ConvexExpr e;
      e.affine.add(L.q1(k), 1.0);
      e.affine.add(L.r_d(k), -sc.s_d * c1);
      e.affine.b = -sc.s_d * c0;
      spec.ineqs.push_back(std::move(e));
    }
    {
      const auto [c0, c1] = reciprocal_bound(x0[L.f(k)]);
      cvx::ConvexExpr e;  // q2 <= cpu (2/f0 - f/f0^2)
      e.affine.add(L.q2(k), 1.0);
      e.affine.add(L.f(k), -cpu * c1);
      e.affine.b = -cpu * c0;
      spec.ineqs.push_back(std::move(e));
    }
  }

  BuildResult res;
  res.spec = std::move(spec);
  res.nominal_vars = 9 * K + 1;
  res.packed_vars = L.n();
  return res;
}

BuildResult build_syn_subproblem(const ChannelState& state, const NetworkConfig& config,
                                 const SingleSessionVariables& iterate) {
  const int K = config.K;
  const SingleLayout L(K, SingleDesign::kSynchronous);
  const std::vector<double> x0 = pack_single(iterate, config);
  check_iterate_positive(L, x0, K);
  const Scaling sc = Scaling::from(config);
  const double t_qos = config.t_qos_s;

  cvx::SubproblemSpec spec;
  build_single_common(state, config, L, x0, spec);
  spec.hi[L.t_d()] = t_qos;
  spec.hi[L.t_c()] = t_qos;
  spec.hi[L.t_u()] = t_qos;

  {
    cvx::ConvexExpr e;  // t_d + t_c + t_u <= t_qos
    e.affine.add(L.t_d(), 1.0);
    e.affine.add(L.t_c(), 1.0);
    e.affine.add(L.t_u(), 1.0);
    e.affine.b = -t_qos;
    spec.ineqs.push_back(std::move(e));
  }
  for (int k = 0; k < K; ++k) {
    const double cpu = config.cycles(k) / sc.f_unit;
    {
      cvx::ConvexExpr e;  // s_d / r_d <= t_d
      e.recips.push_back({unit(L.r_d(k)), sc.s_d});
      e.affine.add(L.t_d(), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    {
      cvx::ConvexExpr e;  // cpu / f <= t_c
      e.recips.push_back({unit(L.f(k)), cpu});
      e.affine.add(L.t_c(), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    {
      cvx::ConvexExpr e;  // s_u / r_u <= t_u
      e.recips.push_back({unit(L.r_u(k)), sc.s_u});
      e.affine.add(L.t_u(), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
  }

  BuildResult res;
  res.spec = std::move(spec);
  res.nominal_vars = 7 * K + 4;
  res.packed_vars = L.n();
  return res;
}

SingleSessionVariables initial_point_single(const ChannelState& state,
                                            const NetworkConfig& config,
                                            SingleDesign design, std::uint64_t seed) {
  const int K = config.K;
  if (config.M <= K) {
    throw InfeasibleError("initial_point_single: zero-forcing needs M > K");
  }
  Rng rng(seed);
  SingleSessionVariables v;
  v.design = design;
  v.eta.resize(K);
  v.zeta.resize(K);
  v.f.resize(K);
  v.omega_d.resize(K);
  v.omega_u.resize(K);
  v.q1.assign(K, 0.0);
  v.q2.assign(K, 0.0);

  double wsum = 0;
  std::vector<double> jw(K);
  for (int k = 0; k < K; ++k) {
    jw[k] = (1.0 / state.beta[k]) * rng.uniform(0.95, 1.05);
    wsum += jw[k];
  }
  for (int k = 0; k < K; ++k) {
    v.eta[k] = 0.8 * jw[k] / wsum;
    v.zeta[k] = 0.8 * rng.uniform(0.95, 1.0);
  }
  const auto rd = models::rate_dl_single(state, config, v.eta);
  const auto ru = models::rate_ul_single(state, config, v.zeta);
  v.r_d.resize(K);
  v.r_u.resize(K);
  std::vector<double> td(K), tu(K);
  for (int k = 0; k < K; ++k) {
    v.r_d[k] = 0.95 * rd[k];
    v.r_u[k] = 0.95 * ru[k];
    v.omega_d[k] = 1.1 * v.eta[k] / v.r_d[k];
    v.omega_u[k] = 1.1 * v.zeta[k] / v.r_u[k];
    td[k] = config.s_d_bits / v.r_d[k];
    tu[k] = config.s_u_bits / v.r_u[k];
  }

  if (design == SingleDesign::kAsynchronous) {
    for (int k = 0; k < K; ++k) {
      const double budget = 0.97 * config.t_qos_s - td[k] - tu[k];
      if (!(budget > 0)) {
        throw InfeasibleError("initial_point_single: transmission exceeds the QoS budget");
      }
      v.f[k] = config.cycles(k) / budget;
      if (v.f[k] > 0.97 * config.f_max) {
        throw InfeasibleError("initial_point_single: computing frequency above f_max");
      }
    }
    double max_dl = 0, min_q12 = cvx::kInf;
    for (int k = 0; k < K; ++k) {
      max_dl = std::max(max_dl, td[k]);
      v.q1[k] = 0.95 * td[k];
      v.q2[k] = 0.95 * config.cycles(k) / v.f[k];
      min_q12 = std::min(min_q12, v.q1[k] + v.q2[k]);
    }
    if (!(1.02 * max_dl < 0.98 * min_q12)) {
      throw InfeasibleError("initial_point_single: downlink span reaches into the uplink");
    }
    v.q = 0.5 * (1.02 * max_dl + 0.98 * min_q12);
  } else {
    v.t_d = 1.03 * *std::max_element(td.begin(), td.end());
    v.t_u = 1.03 * *std::max_element(tu.begin(), tu.end());
    v.t_c = 0.97 * config.t_qos_s - v.t_d - v.t_u;
    if (!(v.t_c > 0)) {
      throw InfeasibleError("initial_point_single: transmission exceeds the QoS budget");
    }
    for (int k = 0; k < K; ++k) {
      v.f[k] = config.cycles(k) / (0.95 * v.t_c);
      if (v.f[k] > 0.97 * config.f_max) {
        throw InfeasibleError("initial_point_single: computing frequency above f_max");
      }
    }
  }
  return v;
}

}  // namespace flmimo::sca
