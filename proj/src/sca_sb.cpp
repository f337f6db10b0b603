#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flmimo/models.hpp"
#include "flmimo/rng.hpp"
#include "flmimo/sca.hpp"

namespace flmimo::sca {

namespace {

size_t cell(int K, int k, int i) { return static_cast<size_t>(k) * K + i; }

void add_weighted(cvx::ConvexExpr& dst, const cvx::ConvexExpr& src, double w) {
  for (size_t t = 0; t < src.affine.idx.size(); ++t) {
    dst.affine.add(src.affine.idx[t], w * src.affine.coef[t]);
  }
  dst.affine.b += w * src.affine.b;
  for (auto q : src.quads) {
    q.c *= w;
    dst.quads.push_back(std::move(q));
  }
  for (auto r : src.recips) {
    r.c *= w;
    dst.recips.push_back(std::move(r));
  }
  for (auto nl : src.neglogs) {
    nl.c *= w;
    dst.neglogs.push_back(std::move(nl));
  }
}

cvx::AffForm unit(int i) {
  cvx::AffForm a;
  a.add(i, 1.0);
  return a;
}

}  // namespace

std::vector<double> pack_sb(const SbVariables& vars, const NetworkConfig& config) {
  const int K = vars.K();
  const SbLayout L(K);
  const Scaling sc = Scaling::from(config);
  std::vector<double> x(L.n(), 0.0);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t c = cell(K, k, i);
      if (i >= 1) x[L.a(k, i)] = vars.schedule.a[c];
      if (i <= K - 2) x[L.b(k, i)] = vars.schedule.b[c];
      x[L.eta(k, i)] = vars.eta[c];
      x[L.zeta(k, i)] = vars.zeta[c];
      x[L.s_d(k, i)] = vars.s_d[c] / sc.rate_unit_d;
      x[L.s_u(k, i)] = vars.s_u[c] / sc.rate_unit_u;
      x[L.r_hat_d(k, i)] = vars.aux.r_hat_d[c] / sc.rate_unit_d;
      x[L.r_tld_d(k, i)] = vars.aux.r_tld_d[c] / sc.rate_unit_d;
      x[L.t_hat_d(k, i)] = vars.aux.t_hat_d[c];
      x[L.t_tld_d(k, i)] = vars.aux.t_tld_d[c];
      x[L.r_hat_u(k, i)] = vars.aux.r_hat_u[c] / sc.rate_unit_u;
      x[L.r_tld_u(k, i)] = vars.aux.r_tld_u[c] / sc.rate_unit_u;
      x[L.t_hat_u(k, i)] = vars.aux.t_hat_u[c];
      x[L.t_tld_u(k, i)] = vars.aux.t_tld_u[c];
      x[L.v_d(k, i)] = vars.aux.v_d[c];
      x[L.v_u(k, i)] = vars.aux.v_u[c];
    }
    x[L.f(k)] = vars.f[k] / sc.f_unit;
    x[L.q1(k)] = vars.aux.q1[k];
    x[L.q2(k)] = vars.aux.q2[k];
  }
  for (int i = 0; i < K; ++i) {
    x[L.t_d(i)] = vars.t_d[i];
    x[L.t_u(i)] = vars.t_u[i];
  }
  x[L.t()] = vars.aux.t;
  x[L.q()] = vars.aux.q;
  return x;
}

SbVariables unpack_sb(std::span<const double> x, const NetworkConfig& config) {
  const int K = config.K;
  const SbLayout L(K);
  const Scaling sc = Scaling::from(config);
  SbVariables v = SbVariables::zeros(K);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t c = cell(K, k, i);
      v.schedule.a[c] = i == 0 ? 1.0 : x[L.a(k, i)];
      v.schedule.b[c] = i == K - 1 ? 1.0 : x[L.b(k, i)];
      v.eta[c] = x[L.eta(k, i)];
      v.zeta[c] = x[L.zeta(k, i)];
      v.s_d[c] = x[L.s_d(k, i)] * sc.rate_unit_d;
      v.s_u[c] = x[L.s_u(k, i)] * sc.rate_unit_u;
      v.aux.r_hat_d[c] = x[L.r_hat_d(k, i)] * sc.rate_unit_d;
      v.aux.r_tld_d[c] = x[L.r_tld_d(k, i)] * sc.rate_unit_d;
      v.aux.t_hat_d[c] = x[L.t_hat_d(k, i)];
      v.aux.t_tld_d[c] = x[L.t_tld_d(k, i)];
      v.aux.r_hat_u[c] = x[L.r_hat_u(k, i)] * sc.rate_unit_u;
      v.aux.r_tld_u[c] = x[L.r_tld_u(k, i)] * sc.rate_unit_u;
      v.aux.t_hat_u[c] = x[L.t_hat_u(k, i)];
      v.aux.t_tld_u[c] = x[L.t_tld_u(k, i)];
      v.aux.v_d[c] = x[L.v_d(k, i)];
      v.aux.v_u[c] = x[L.v_u(k, i)];
    }
    v.f[k] = x[L.f(k)] * sc.f_unit;
    v.aux.q1[k] = x[L.q1(k)];
    v.aux.q2[k] = x[L.q2(k)];
  }
  for (int i = 0; i < K; ++i) {
    v.t_d[i] = x[L.t_d(i)];
    v.t_u[i] = x[L.t_u(i)];
  }
  v.aux.t = x[L.t()];
  v.aux.q = x[L.q()];
  return v;
}

BuildResult build_sb_subproblem(const ChannelState& state, const NetworkConfig& config,
                                const PenaltyConfig& penalty, const SbVariables& iterate) {
  const int K = config.K;
  const SbLayout L(K);
  const Scaling sc = Scaling::from(config);
  const std::vector<double> x0 = pack_sb(iterate, config);
  const double t_qos = config.t_qos_s;
  const double ln2 = std::log(2.0);

  for (int k = 0; k < K; ++k) {
    if (!(x0[L.f(k)] > 0)) throw std::domain_error("build_sb: nonpositive frequency at iterate");
    for (int i = 0; i < K; ++i) {
      if (!(x0[L.eta(k, i)] > 0) || !(x0[L.zeta(k, i)] > 0)) {
        throw std::domain_error("build_sb: zero power at linearization point");
      }
    }
  }

  cvx::SubproblemSpec spec;
  spec.n = L.n();
  spec.lo.assign(spec.n, 0.0);
  spec.hi.assign(spec.n, cvx::kInf);

  // Boxes.
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      if (i >= 1) spec.hi[L.a(k, i)] = 1.0;
      if (i <= K - 2) spec.hi[L.b(k, i)] = 1.0;
      spec.hi[L.eta(k, i)] = 1.0;
      spec.hi[L.zeta(k, i)] = 1.0;
      spec.hi[L.s_d(k, i)] = sc.s_d;
      spec.hi[L.s_u(k, i)] = sc.s_u;
      const double rcap_d =
          1.1 * std::log2(1.0 + (config.M - (K - i)) * config.rho_d * state.sigma2_dl_hat[k]);
      const double rcap_u =
          1.1 * std::log2(1.0 + (config.M - (i + 1)) * config.rho_u * state.sigma2_ul_bar[k]);
      spec.hi[L.r_hat_d(k, i)] = rcap_d;
      spec.hi[L.r_tld_d(k, i)] = rcap_d;
      spec.hi[L.r_hat_u(k, i)] = rcap_u;
      spec.hi[L.r_tld_u(k, i)] = rcap_u;
      spec.hi[L.t_hat_d(k, i)] = t_qos;
      spec.hi[L.t_tld_d(k, i)] = t_qos;
      spec.hi[L.t_hat_u(k, i)] = t_qos;
      spec.hi[L.t_tld_u(k, i)] = t_qos;
      spec.hi[L.v_d(k, i)] = 1.05 * t_qos;
      spec.hi[L.v_u(k, i)] = 1.05 * t_qos;
    }
    spec.hi[L.f(k)] = config.f_max / sc.f_unit;
    spec.hi[L.q1(k)] = t_qos;
    spec.hi[L.q2(k)] = t_qos;
  }
  for (int i = 0; i < K; ++i) {
    spec.hi[L.t_d(i)] = t_qos;
    spec.hi[L.t_u(i)] = t_qos;
  }
  spec.hi[L.t()] = t_qos;
  spec.hi[L.q()] = 2.0 * t_qos;

  // Equalities: participation counts per session, payload splits per UE.
  for (int i = 1; i < K; ++i) {
    cvx::LinEq eq;
    for (int k = 0; k < K; ++k) eq.a.add(L.a(k, i), 1.0);
    eq.a.b = -static_cast<double>(K - i);
    spec.eqs.push_back(std::move(eq));
  }
  for (int j = 0; j + 1 < K; ++j) {
    cvx::LinEq eq;
    for (int k = 0; k < K; ++k) eq.a.add(L.b(k, j), 1.0);
    eq.a.b = -static_cast<double>(j + 1);
    spec.eqs.push_back(std::move(eq));
  }
  for (int k = 0; k < K; ++k) {
    cvx::LinEq ed, eu;
    for (int i = 0; i < K; ++i) {
      ed.a.add(L.s_d(k, i), 1.0);
      eu.a.add(L.s_u(k, i), 1.0);
    }
    ed.a.b = -sc.s_d;
    eu.a.b = -sc.s_u;
    spec.eqs.push_back(std::move(ed));
    spec.eqs.push_back(std::move(eu));
  }

  // Session-structure inequalities.
  for (int k = 0; k < K; ++k) {
    for (int i = 2; i < K; ++i) {  // a monotone; i = 1 is the box against the pinned 1.
      cvx::ConvexExpr e;
      e.affine.add(L.a(k, i), 1.0);
      e.affine.add(L.a(k, i - 1), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    for (int j = 0; j + 2 < K; ++j) {  // b monotone
      cvx::ConvexExpr e;
      e.affine.add(L.b(k, j), 1.0);
      e.affine.add(L.b(k, j + 1), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
  }

  // Power families.
  for (int i = 0; i < K; ++i) {
    cvx::ConvexExpr e;
    for (int k = 0; k < K; ++k) e.affine.add(L.eta(k, i), 1.0);
    e.affine.b = -1.0;
    spec.ineqs.push_back(std::move(e));
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 1; i < K; ++i) {
      cvx::ConvexExpr e;
      e.affine.add(L.eta(k, i), 1.0);
      e.affine.add(L.a(k, i), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    for (int j = 0; j + 1 < K; ++j) {
      cvx::ConvexExpr e;
      e.affine.add(L.zeta(k, j), 1.0);
      e.affine.add(L.b(k, j), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
  }

  // Achievable-rate bounds.
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      {
        RateBoundData d;
        d.pref = 1.0 / ln2;
        const double cu = (config.M - (K - i)) * config.rho_d * state.sigma2_dl_hat[k];
        d.u.add(L.eta(k, i), cu);
        d.u0 = cu * x0[L.eta(k, i)];
        const double cp = config.rho_d * (state.beta[k] - state.sigma2_dl_hat[k]);
        d.p.b = 1.0;
        double p0 = 1.0;
        for (int l = 0; l < K; ++l) {
          d.p.add(L.eta(l, i), cp);
          p0 += cp * x0[L.eta(l, i)];
        }
        d.p0 = p0;
        spec.ineqs.push_back(lower_bound_rate(d, L.r_hat_d(k, i)));
        spec.ineqs.push_back(upper_bound_rate(d, L.r_tld_d(k, i)));
      }
      {
        RateBoundData d;
        d.pref = 1.0 / ln2;
        const double cu = (config.M - (i + 1)) * config.rho_u * state.sigma2_ul_bar[k];
        d.u.add(L.zeta(k, i), cu);
        d.u0 = cu * x0[L.zeta(k, i)];
        d.p.b = 1.0;
        double p0 = 1.0;
        for (int l = 0; l < K; ++l) {
          const double cl = config.rho_u * (state.beta[l] - state.sigma2_ul_bar[l]);
          d.p.add(L.zeta(l, i), cl);
          p0 += cl * x0[L.zeta(l, i)];
        }
        d.p0 = p0;
        spec.ineqs.push_back(lower_bound_rate(d, L.r_hat_u(k, i)));
        spec.ineqs.push_back(upper_bound_rate(d, L.r_tld_u(k, i)));
      }
    }
  }

  // Session-time brackets t_hat <= a t_d <= t_tld and the payload product
  // bound s <= r_hat * t_hat, plus the objective epigraph v >= eta * t_tld.
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      if (i == 0) {  // downlink column 0 is pinned to a = 1: exact affine rows
        cvx::ConvexExpr lo_row;
        lo_row.affine.add(L.t_hat_d(k, 0), 1.0);
        lo_row.affine.add(L.t_d(0), -1.0);
        spec.ineqs.push_back(std::move(lo_row));
        cvx::ConvexExpr hi_row;
        hi_row.affine.add(L.t_d(0), 1.0);
        hi_row.affine.add(L.t_tld_d(k, 0), -1.0);
        spec.ineqs.push_back(std::move(hi_row));
      } else {
        const auto s = bilinear_bounds(unit(L.a(k, i)), unit(L.t_d(i)), unit(L.t_hat_d(k, i)),
                                       x0[L.a(k, i)], x0[L.t_d(i)]);
        spec.ineqs.push_back(s.z_minus_xy);  // t_hat - a t_d <= 0
        const auto s2 = bilinear_bounds(unit(L.a(k, i)), unit(L.t_d(i)), unit(L.t_tld_d(k, i)),
                                        x0[L.a(k, i)], x0[L.t_d(i)]);
        spec.ineqs.push_back(s2.xy_minus_z);  // a t_d - t_tld <= 0
      }
      if (i == K - 1) {  // uplink column K-1 pinned to b = 1
        cvx::ConvexExpr lo_row;
        lo_row.affine.add(L.t_hat_u(k, i), 1.0);
        lo_row.affine.add(L.t_u(i), -1.0);
        spec.ineqs.push_back(std::move(lo_row));
        cvx::ConvexExpr hi_row;
        hi_row.affine.add(L.t_u(i), 1.0);
        hi_row.affine.add(L.t_tld_u(k, i), -1.0);
        spec.ineqs.push_back(std::move(hi_row));
      } else {
        const auto s = bilinear_bounds(unit(L.b(k, i)), unit(L.t_u(i)), unit(L.t_hat_u(k, i)),
                                       x0[L.b(k, i)], x0[L.t_u(i)]);
        spec.ineqs.push_back(s.z_minus_xy);
        const auto s2 = bilinear_bounds(unit(L.b(k, i)), unit(L.t_u(i)), unit(L.t_tld_u(k, i)),
                                        x0[L.b(k, i)], x0[L.t_u(i)]);
        spec.ineqs.push_back(s2.xy_minus_z);
      }
      // s <= r_hat t_hat (both directions use the z - xy majorant).
      spec.ineqs.push_back(
          bilinear_bounds(unit(L.r_hat_d(k, i)), unit(L.t_hat_d(k, i)), unit(L.s_d(k, i)),
                          x0[L.r_hat_d(k, i)], x0[L.t_hat_d(k, i)])
              .z_minus_xy);
      spec.ineqs.push_back(
          bilinear_bounds(unit(L.r_hat_u(k, i)), unit(L.t_hat_u(k, i)), unit(L.s_u(k, i)),
                          x0[L.r_hat_u(k, i)], x0[L.t_hat_u(k, i)])
              .z_minus_xy);
      // eta t_tld <= v.
      spec.ineqs.push_back(
          bilinear_bounds(unit(L.eta(k, i)), unit(L.t_tld_d(k, i)), unit(L.v_d(k, i)),
                          x0[L.eta(k, i)], x0[L.t_tld_d(k, i)])
              .xy_minus_z);
      spec.ineqs.push_back(
          bilinear_bounds(unit(L.zeta(k, i)), unit(L.t_tld_u(k, i)), unit(L.v_u(k, i)),
                          x0[L.zeta(k, i)], x0[L.t_tld_u(k, i)])
              .xy_minus_z);
    }
  }

  // Round-duration and uplink-start ordering constraints.
  for (int k = 0; k < K; ++k) {
    const double cpu = config.cycles(k) / sc.f_unit;  // t_C = cpu / f'
    {
      cvx::ConvexExpr e;  // sum t_tld_d + cpu/f + sum t_tld_u - t <= 0
      for (int i = 0; i < K; ++i) {
        e.affine.add(L.t_tld_d(k, i), 1.0);
        e.affine.add(L.t_tld_u(k, i), 1.0);
      }
      e.affine.add(L.t(), -1.0);
      e.recips.push_back({unit(L.f(k)), cpu});
      spec.ineqs.push_back(std::move(e));
    }
    {
      cvx::ConvexExpr e;  // sum t_tld_d - q <= 0
      for (int i = 0; i < K; ++i) e.affine.add(L.t_tld_d(k, i), 1.0);
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
      cvx::ConvexExpr e;  // q1 - sum t_hat_d <= 0
      e.affine.add(L.q1(k), 1.0);
      for (int i = 0; i < K; ++i) e.affine.add(L.t_hat_d(k, i), -1.0);
      spec.ineqs.push_back(std::move(e));
    }
    {
      // q2 <= cpu (2/f0 - f/f0^2): affine lower bound of the computing time.
      const auto [c0, c1] = reciprocal_bound(x0[L.f(k)]);
      cvx::ConvexExpr e;
      e.affine.add(L.q2(k), 1.0);
      e.affine.add(L.f(k), -cpu * c1);
      e.affine.b = -cpu * c0;
      spec.ineqs.push_back(std::move(e));
    }
  }

  // Objective: epigraph energy plus the weighted penalty majorants.
  cvx::ConvexExpr& obj = spec.objective;
  const double pd = config.rho_d * config.noise_w;
  const double pu = config.rho_u * config.noise_w;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      obj.affine.add(L.v_d(k, i), pd);
      obj.affine.add(L.v_u(k, i), pu);
    }
    const double kf = config.L * (config.alpha / 2.0) * config.c_cycles(k) *
                      config.d_samples(k) * sc.f_unit * sc.f_unit;
    obj.quads.push_back({unit(L.f(k)), kf});
  }
  const double w1 = penalty.lambda * penalty.gammas[0];
  const double w2 = penalty.lambda * penalty.gammas[1];
  const double w3 = penalty.lambda * penalty.gammas[2];
  const double w4 = penalty.lambda * penalty.gammas[3];
  for (int k = 0; k < K; ++k) {
    for (int i = 1; i < K; ++i) {  // V1 majorant: a - 2 a0 a + a0^2
      const double a0 = x0[L.a(k, i)];
      obj.affine.add(L.a(k, i), w1 * (1.0 - 2.0 * a0));
      obj.affine.b += w1 * a0 * a0;
    }
    for (int j = 0; j + 1 < K; ++j) {
      const double b0 = x0[L.b(k, j)];
      obj.affine.add(L.b(k, j), w1 * (1.0 - 2.0 * b0));
      obj.affine.b += w1 * b0 * b0;
    }
    for (int i = 0; i < K; ++i) {
      // V2/V3 majorants: the xy - z surrogate of r_tld * t_tld - s.
      add_weighted(obj,
                   bilinear_bounds(unit(L.r_tld_d(k, i)), unit(L.t_tld_d(k, i)),
                                   unit(L.s_d(k, i)), x0[L.r_tld_d(k, i)], x0[L.t_tld_d(k, i)])
                       .xy_minus_z,
                   w2);
      add_weighted(obj,
                   bilinear_bounds(unit(L.r_tld_u(k, i)), unit(L.t_tld_u(k, i)),
                                   unit(L.s_u(k, i)), x0[L.r_tld_u(k, i)], x0[L.t_tld_u(k, i)])
                       .xy_minus_z,
                   w3);
    }
    // V4 majorant: t - sum t_hat_d - cpu(2/f0 - f/f0^2) - sum t_hat_u.
    const double cpu = config.cycles(k) / sc.f_unit;
    const auto [c0, c1] = reciprocal_bound(x0[L.f(k)]);
    obj.affine.add(L.t(), w4);
    for (int i = 0; i < K; ++i) {
      obj.affine.add(L.t_hat_d(k, i), -w4);
      obj.affine.add(L.t_hat_u(k, i), -w4);
    }
    obj.affine.add(L.f(k), -w4 * cpu * c1);
    obj.affine.b += -w4 * cpu * c0;
  }

  BuildResult res;
  res.spec = std::move(spec);
  res.nominal_vars = 16 * K * K + 5 * K + 2;
  res.packed_vars = L.n();
  return res;
}

SbVariables initial_point_sb(const ChannelState& state, const NetworkConfig& config,
                             std::uint64_t seed) {
  const int K = config.K;
  if (config.M <= K) {
    throw InfeasibleError("initial_point_sb: zero-forcing needs M > K");
  }
  Rng rng(seed);
  SbVariables v = SbVariables::zeros(K);

  // Exit/entry orders from equal-power single-session rates: the fastest UE
  // leaves the downlink first and joins the uplink last.
  std::vector<double> eq_eta(K, 0.9 / K), eq_zeta(K, 0.9);
  const auto rd0 = models::rate_dl_single(state, config, eq_eta);
  const auto ru0 = models::rate_ul_single(state, config, eq_zeta);
  std::vector<int> order_d(K), order_u(K);
  std::iota(order_d.begin(), order_d.end(), 0);
  std::iota(order_u.begin(), order_u.end(), 0);
  std::stable_sort(order_d.begin(), order_d.end(),
                   [&](int a, int b) { return rd0[a] > rd0[b]; });
  std::stable_sort(order_u.begin(), order_u.end(),
                   [&](int a, int b) { return ru0[a] > ru0[b]; });
  std::vector<int> stay(K), entry(K);
  for (int r = 0; r < K; ++r) {
    stay[order_d[r]] = r + 1;        // fastest stays one session
    entry[order_u[r]] = K - 1 - r;   // fastest enters last
  }

  // Blend the binary structure with a fractional center so every indicator
  // is strictly inside (0, 1) while the session sums hold exactly.
  const double mix = 0.98;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const double abin = i < stay[k] ? 1.0 : 0.0;
      const double bbin = i >= entry[k] ? 1.0 : 0.0;
      v.schedule.A(k, i) = i == 0 ? 1.0 : mix * abin + (1.0 - mix) * (K - i) / K;
      v.schedule.B(k, i) = i == K - 1 ? 1.0 : mix * bbin + (1.0 - mix) * (i + 1.0) / K;
    }
  }

  // Powers: inverse-beta weights with jitter, scaled to strict interior.
  std::vector<double> jw(K);
  for (int k = 0; k < K; ++k) jw[k] = (1.0 / state.beta[k]) * rng.uniform(0.95, 1.05);
  for (int i = 0; i < K; ++i) {
    double wsum = 0;
    for (int k = 0; k < K; ++k) wsum += jw[k] * v.schedule.A(k, i);
    for (int k = 0; k < K; ++k) {
      const size_t c = cell(K, k, i);
      v.eta[c] = 0.9 * v.schedule.A(k, i) * jw[k] / wsum;
      v.zeta[c] = 0.85 * rng.uniform(0.95, 1.0) * v.schedule.B(k, i);
    }
  }

  // Session durations from the bound rates with margin, then payload splits
  // proportional to what each session can carry.
  std::vector<double> rate_d(static_cast<size_t>(K) * K), rate_u(static_cast<size_t>(K) * K);
  std::vector<double> eta_i(K), zeta_j(K);
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      eta_i[k] = v.eta[cell(K, k, i)];
      zeta_j[k] = v.zeta[cell(K, k, i)];
    }
    for (int k = 0; k < K; ++k) {
      rate_d[cell(K, k, i)] = models::rate_dl_session_relaxed(state, config, eta_i, K - i, k);
      rate_u[cell(K, k, i)] = models::rate_ul_session_relaxed(state, config, zeta_j, i + 1, k);
    }
  }
  // Triangular solve in exit order: UE leaving after session m determines
  // t_d[m] from its remaining payload.
  std::vector<int> by_stay(K), by_entry(K);
  std::iota(by_stay.begin(), by_stay.end(), 0);
  std::sort(by_stay.begin(), by_stay.end(), [&](int a, int b) { return stay[a] < stay[b]; });
  for (int r = 0; r < K; ++r) {
    const int k = by_stay[r];
    double carried = 0;
    for (int i = 0; i < stay[k] - 1; ++i) carried += rate_d[cell(K, k, i)] * v.t_d[i];
    const int i_last = stay[k] - 1;
    v.t_d[i_last] = std::max((config.s_d_bits - carried) / rate_d[cell(K, k, i_last)],
                             1e-4 * config.t_qos_s / K);
  }
  std::iota(by_entry.begin(), by_entry.end(), 0);
  std::sort(by_entry.begin(), by_entry.end(),
            [&](int a, int b) { return entry[a] > entry[b]; });
  for (int r = 0; r < K; ++r) {
    const int k = by_entry[r];
    double carried = 0;
    for (int j = entry[k] + 1; j < K; ++j) carried += rate_u[cell(K, k, j)] * v.t_u[j];
    v.t_u[entry[k]] = std::max((config.s_u_bits - carried) / rate_u[cell(K, k, entry[k])],
                               1e-4 * config.t_qos_s / K);
  }
  for (int i = 0; i < K; ++i) {
    v.t_d[i] *= 1.3;
    v.t_u[i] *= 1.3;
  }

  for (int k = 0; k < K; ++k) {
    double cap_d = 0, cap_u = 0;
    for (int i = 0; i < K; ++i) {
      cap_d += rate_d[cell(K, k, i)] * v.schedule.A(k, i) * v.t_d[i];
      cap_u += rate_u[cell(K, k, i)] * v.schedule.B(k, i) * v.t_u[i];
    }
    for (int i = 0; i < K; ++i) {
      const size_t c = cell(K, k, i);
      v.s_d[c] = config.s_d_bits * rate_d[c] * v.schedule.A(k, i) * v.t_d[i] / cap_d;
      v.s_u[c] = config.s_u_bits * rate_u[c] * v.schedule.B(k, i) * v.t_u[i] / cap_u;
      v.aux.r_hat_d[c] = 0.93 * rate_d[c];
      v.aux.r_tld_d[c] = 1.07 * rate_d[c];
      v.aux.r_hat_u[c] = 0.93 * rate_u[c];
      v.aux.r_tld_u[c] = 1.07 * rate_u[c];
      v.aux.t_hat_d[c] = 0.9 * v.schedule.A(k, i) * v.t_d[i];
      v.aux.t_tld_d[c] = 1.1 * v.schedule.A(k, i) * v.t_d[i];
      v.aux.t_hat_u[c] = 0.9 * v.schedule.B(k, i) * v.t_u[i];
      v.aux.t_tld_u[c] = 1.1 * v.schedule.B(k, i) * v.t_u[i];
      v.aux.v_d[c] = 1.1 * v.eta[c] * v.aux.t_tld_d[c] + 1e-9;
      v.aux.v_u[c] = 1.1 * v.zeta[c] * v.aux.t_tld_u[c] + 1e-9;
    }
  }

  // Frequencies fill the remaining budget; the shared duration sits just
  // under the QoS bound.
  v.aux.t = 0.995 * config.t_qos_s;
  for (int k = 0; k < K; ++k) {
    double busy_tx = 0;
    for (int i = 0; i < K; ++i) {
      busy_tx += v.aux.t_tld_d[cell(K, k, i)] + v.aux.t_tld_u[cell(K, k, i)];
    }
    const double tc = 0.98 * v.aux.t - busy_tx;
    if (!(tc > 0)) {
      throw InfeasibleError("initial_point_sb: transmission alone exceeds the QoS budget");
    }
    v.f[k] = config.cycles(k) / tc;
    if (v.f[k] > 0.98 * config.f_max) {
      throw InfeasibleError("initial_point_sb: required computing frequency exceeds f_max");
    }
  }
  // Uplink-start ordering auxiliaries.
  double max_dl = 0;
  for (int k = 0; k < K; ++k) {
    double s = 0;
    for (int i = 0; i < K; ++i) s += v.aux.t_tld_d[cell(K, k, i)];
    max_dl = std::max(max_dl, s);
  }
  double min_q12 = cvx::kInf;
  for (int k = 0; k < K; ++k) {
    double lo_dl = 0;
    for (int i = 0; i < K; ++i) lo_dl += v.aux.t_hat_d[cell(K, k, i)];
    v.aux.q1[k] = 0.98 * lo_dl;
    v.aux.q2[k] = 0.95 * config.cycles(k) / v.f[k];
    min_q12 = std::min(min_q12, v.aux.q1[k] + v.aux.q2[k]);
  }
  if (!(1.02 * max_dl < 0.98 * min_q12)) {
    throw InfeasibleError("initial_point_sb: downlink span leaves no room before the uplink");
  }
  v.aux.q = 0.5 * (1.02 * max_dl + 0.98 * min_q12);
  return v;
}

SbVariables binarize_and_polish(const SbVariables& vars, const ChannelState& state,
                                const NetworkConfig& config, double tol) {
  const int K = vars.K();
  SbVariables out = vars;

  // Near-binary indicators pick the intended participation; the session
  // timeline is then re-simulated exactly: each downlink session runs until
  // the next UE's remaining payload hits zero, which both fixes the exit
  // order and guarantees nonnegative durations. Powers are kept from the
  // relaxed solution (masked outside the binary support).
  std::vector<char> active(K, 1);
  std::vector<double> remaining(K, config.s_d_bits);
  std::vector<double> eta_col(K), rates(K);
  std::vector<double> rate_d(static_cast<size_t>(K) * K, 0.0);
  std::fill(out.t_d.begin(), out.t_d.end(), 0.0);
  std::fill(out.schedule.a.begin(), out.schedule.a.end(), 0.0);
  std::fill(out.schedule.b.begin(), out.schedule.b.end(), 0.0);
  for (int i = 0; i < K; ++i) {
    // eta <= a already confines power to the relaxed support; the running
    // active set handles the rest.
    for (int k = 0; k < K; ++k) {
      eta_col[k] = active[k] ? vars.eta[cell(K, k, i)] : 0.0;
    }
    int exit_ue = -1;
    double t_len = cvx::kInf;
    for (int k = 0; k < K; ++k) {
      if (!active[k]) continue;
      rates[k] = models::rate_dl_session_relaxed(state, config, eta_col, K - i, k);
      const bool done = remaining[k] <= 1e-9 * config.s_d_bits;
      if (!(rates[k] > 0) && !done) {
        throw ValidationError(
            "binarize_and_polish: inactive power for a scheduled UE in downlink session " +
            std::to_string(i + 1));
      }
      const double finish = done ? 0.0 : remaining[k] / rates[k];
      if (finish < t_len) {
        t_len = finish;
        exit_ue = k;
      }
    }
    out.t_d[i] = t_len;
    for (int k = 0; k < K; ++k) {
      if (!active[k]) continue;
      out.schedule.A(k, i) = 1.0;
      out.eta[cell(K, k, i)] = eta_col[k];
      rate_d[cell(K, k, i)] = rates[k];
      out.s_d[cell(K, k, i)] = rates[k] * t_len;
      remaining[k] -= rates[k] * t_len;
    }
    for (int k = 0; k < K; ++k) {
      if (!active[k]) {
        out.eta[cell(K, k, i)] = 0.0;
        out.s_d[cell(K, k, i)] = 0.0;
      }
    }
    remaining[exit_ue] = 0.0;
    active[exit_ue] = 0;
  }

  // Uplink: simulated backward from the final session, peeling off the UE
  // that must have entered last (the one whose payload depletes first going
  // backward in time).
  std::fill(active.begin(), active.end(), 1);
  std::fill(remaining.begin(), remaining.end(), config.s_u_bits);
  std::vector<double> rate_u(static_cast<size_t>(K) * K, 0.0);
  std::fill(out.t_u.begin(), out.t_u.end(), 0.0);
  for (int j = K - 1; j >= 0; --j) {
    for (int k = 0; k < K; ++k) {
      eta_col[k] = active[k] ? vars.zeta[cell(K, k, j)] : 0.0;
    }
    int leave_ue = -1;
    double t_len = cvx::kInf;
    for (int k = 0; k < K; ++k) {
      if (!active[k]) continue;
      rates[k] = models::rate_ul_session_relaxed(state, config, eta_col, j + 1, k);
      const bool done = remaining[k] <= 1e-9 * config.s_u_bits;
      if (!(rates[k] > 0) && !done) {
        throw ValidationError(
            "binarize_and_polish: inactive power for a scheduled UE in uplink session " +
            std::to_string(j + 1));
      }
      const double finish = done ? 0.0 : remaining[k] / rates[k];
      if (finish < t_len) {
        t_len = finish;
        leave_ue = k;
      }
    }
    out.t_u[j] = t_len;
    for (int k = 0; k < K; ++k) {
      if (!active[k]) continue;
      out.schedule.B(k, j) = 1.0;
      out.zeta[cell(K, k, j)] = eta_col[k];
      rate_u[cell(K, k, j)] = rates[k];
      out.s_u[cell(K, k, j)] = rates[k] * t_len;
      remaining[k] -= rates[k] * t_len;
    }
    for (int k = 0; k < K; ++k) {
      if (!active[k]) {
        out.zeta[cell(K, k, j)] = 0.0;
        out.s_u[cell(K, k, j)] = 0.0;
      }
    }
    remaining[leave_ue] = 0.0;
    active[leave_ue] = 0;
  }

  // Auxiliaries collapse onto the primal quantities; frequencies spend the
  // whole remaining QoS budget.
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t c = cell(K, k, i);
      out.aux.r_hat_d[c] = rate_d[c];
      out.aux.r_tld_d[c] = rate_d[c];
      out.aux.r_hat_u[c] = rate_u[c];
      out.aux.r_tld_u[c] = rate_u[c];
      out.aux.t_hat_d[c] = out.schedule.A(k, i) * out.t_d[i];
      out.aux.t_tld_d[c] = out.aux.t_hat_d[c];
      out.aux.t_hat_u[c] = out.schedule.B(k, i) * out.t_u[i];
      out.aux.t_tld_u[c] = out.aux.t_hat_u[c];
      out.aux.v_d[c] = out.eta[c] * out.aux.t_tld_d[c];
      out.aux.v_u[c] = out.zeta[c] * out.aux.t_tld_u[c];
    }
  }
  out.aux.t = config.t_qos_s;
  double max_dl = 0;
  for (int k = 0; k < K; ++k) {
    double dl = 0, ul = 0;
    for (int i = 0; i < K; ++i) {
      dl += out.aux.t_hat_d[cell(K, k, i)];
      ul += out.aux.t_hat_u[cell(K, k, i)];
    }
    const double budget = config.t_qos_s - dl - ul;
    if (!(budget > 0)) {
      throw ValidationError("binarize_and_polish: no computing budget left for UE " +
                            std::to_string(k));
    }
    out.f[k] = std::min(config.cycles(k) / budget, config.f_max);
    max_dl = std::max(max_dl, dl);
  }
  for (int k = 0; k < K; ++k) {
    double dl = 0;
    for (int i = 0; i < K; ++i) dl += out.aux.t_hat_d[cell(K, k, i)];
    out.aux.q1[k] = dl;
    out.aux.q2[k] = config.cycles(k) / out.f[k];
  }
  out.aux.q = max_dl;

  (void)tol;
  return out;
}

}  // namespace flmimo::sca
