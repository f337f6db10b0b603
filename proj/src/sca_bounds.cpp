#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "flmimo/models.hpp"
#include "flmimo/sca.hpp"

namespace flmimo::sca {

void ScaTrace::write_csv(std::ostream& os) const {
  os << "iter,objective,V1,V2,V3,V4\n";
  char buf[192];
  for (size_t i = 0; i < objective.size(); ++i) {
    const auto& v = i < penalties.size() ? penalties[i] : std::array<double, 4>{};
    std::snprintf(buf, sizeof(buf), "%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n", i + 1,
                  objective[i], v[0], v[1], v[2], v[3]);
    os << buf;
  }
}

Scaling Scaling::from(const NetworkConfig& config) {
  Scaling s;
  s.rate_unit_d = (config.tau_c - config.tau_dp) / config.tau_c * config.bandwidth_hz;
  s.rate_unit_u = (config.tau_c - config.tau_up) / config.tau_c * config.bandwidth_hz;
  // Unit chosen so a frequency filling a quarter of the QoS budget with
  // computation sits at O(1).
  double mean_cycles = 0;
  for (int k = 0; k < config.K; ++k) mean_cycles += config.cycles(k);
  mean_cycles /= config.K;
  s.f_unit = mean_cycles / (0.25 * config.t_qos_s);
  s.s_d = config.s_d_bits / s.rate_unit_d;
  s.s_u = config.s_u_bits / s.rate_unit_u;
  return s;
}

cvx::ConvexExpr lower_bound_rate(const RateBoundData& d, int r_index) {
  if (!(d.u0 > 0) || !(d.p0 > 0)) {
    throw std::domain_error("lower_bound_rate: nonpositive linearization point");
  }
  // log(1 + u/p) >= log(1 + u0/p0) + 2u0/(u0+p0) - u0^2/((u0+p0) u)
  //                - u0 p / ((u0+p0) p0).
  const double sum0 = d.u0 + d.p0;
  cvx::ConvexExpr e;
  e.affine.add(r_index, 1.0);
  e.affine.b = -d.pref * (std::log1p(d.u0 / d.p0) + 2.0 * d.u0 / sum0);
  // + pref * u0 p / (sum0 p0)
  const double cp = d.pref * d.u0 / (sum0 * d.p0);
  for (size_t t = 0; t < d.p.idx.size(); ++t) e.affine.add(d.p.idx[t], cp * d.p.coef[t]);
  e.affine.b += cp * d.p.b;
  // + pref * u0^2 / (sum0 * u)
  e.recips.push_back({d.u, d.pref * d.u0 * d.u0 / sum0});
  return e;
}

cvx::ConvexExpr upper_bound_rate(const RateBoundData& d, int r_index) {
  if (!(d.u0 > 0) || !(d.p0 > 0)) {
    throw std::domain_error("upper_bound_rate: nonpositive linearization point");
  }
  // log(1 + u/p) <= log(u0+p0) + (u + p - u0 - p0)/(u0+p0) - log(p).
  const double sum0 = d.u0 + d.p0;
  cvx::ConvexExpr e;
  e.affine.add(r_index, -1.0);
  e.affine.b = d.pref * (std::log(sum0) - 1.0);
  const double cl = d.pref / sum0;
  for (size_t t = 0; t < d.u.idx.size(); ++t) e.affine.add(d.u.idx[t], cl * d.u.coef[t]);
  for (size_t t = 0; t < d.p.idx.size(); ++t) e.affine.add(d.p.idx[t], cl * d.p.coef[t]);
  e.affine.b += cl * (d.u.b + d.p.b);
  e.neglogs.push_back({d.p, d.pref});
  return e;
}

BilinearSurrogates bilinear_bounds(const cvx::AffForm& x, const cvx::AffForm& y,
                                   const cvx::AffForm& z, double x0, double y0) {
  if (x0 < 0 || y0 < 0) {
    throw std::domain_error("bilinear_bounds: negative linearization point");
  }
  BilinearSurrogates s;
  // x*y - z <= 0.25 [(x+y)^2 - 2(x0-y0)(x-y) + (x0-y0)^2 - 4z]
  {
    cvx::ConvexExpr& e = s.xy_minus_z;
    cvx::AffForm sum = x;
    for (size_t t = 0; t < y.idx.size(); ++t) sum.add(y.idx[t], y.coef[t]);
    sum.b += y.b;
    e.quads.push_back({sum, 0.25});
    const double d0 = x0 - y0;
    const double c = -0.5 * d0;
    for (size_t t = 0; t < x.idx.size(); ++t) e.affine.add(x.idx[t], c * x.coef[t]);
    for (size_t t = 0; t < y.idx.size(); ++t) e.affine.add(y.idx[t], -c * y.coef[t]);
    e.affine.b += c * (x.b - y.b) + 0.25 * d0 * d0;
    for (size_t t = 0; t < z.idx.size(); ++t) e.affine.add(z.idx[t], -z.coef[t]);
    e.affine.b -= z.b;
  }
  // z - x*y <= 0.25 [4z + (x-y)^2 - 2(x0+y0)(x+y) + (x0+y0)^2]
  {
    cvx::ConvexExpr& e = s.z_minus_xy;
    cvx::AffForm diff = x;
    for (size_t t = 0; t < y.idx.size(); ++t) diff.add(y.idx[t], -y.coef[t]);
    diff.b -= y.b;
    e.quads.push_back({diff, 0.25});
    const double s0 = x0 + y0;
    const double c = -0.5 * s0;
    for (size_t t = 0; t < x.idx.size(); ++t) e.affine.add(x.idx[t], c * x.coef[t]);
    for (size_t t = 0; t < y.idx.size(); ++t) e.affine.add(y.idx[t], c * y.coef[t]);
    e.affine.b += c * (x.b + y.b) + 0.25 * s0 * s0;
    for (size_t t = 0; t < z.idx.size(); ++t) e.affine.add(z.idx[t], z.coef[t]);
    e.affine.b += z.b;
  }
  return s;
}

std::pair<double, double> reciprocal_bound(double x0) {
  if (!(x0 > 0)) throw std::domain_error("reciprocal_bound: nonpositive linearization point");
  return {2.0 / x0, -1.0 / (x0 * x0)};
}

std::array<double, 4> penalty_values(const SbVariables& vars, const NetworkConfig& config) {
  const int K = vars.K();
  const Scaling sc = Scaling::from(config);
  std::array<double, 4> v{0, 0, 0, 0};
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const double a = vars.schedule.A(k, i);
      const double b = vars.schedule.B(k, i);
      v[0] += (a - a * a) + (b - b * b);
      const size_t idx = static_cast<size_t>(k) * K + i;
      v[1] += (vars.aux.r_tld_d[idx] / sc.rate_unit_d) * vars.aux.t_tld_d[idx] -
              vars.s_d[idx] / sc.rate_unit_d;
      v[2] += (vars.aux.r_tld_u[idx] / sc.rate_unit_u) * vars.aux.t_tld_u[idx] -
              vars.s_u[idx] / sc.rate_unit_u;
    }
    double busy_low = 0;
    for (int i = 0; i < K; ++i) {
      busy_low += vars.aux.t_hat_d[static_cast<size_t>(k) * K + i] +
                  vars.aux.t_hat_u[static_cast<size_t>(k) * K + i];
    }
    v[3] += vars.aux.t - busy_low - config.cycles(k) / vars.f[k];
  }
  return v;
}

double lagrangian_value(const SbVariables& vars, const NetworkConfig& config,
                        const PenaltyConfig& penalty) {
  const int K = vars.K();
  double e = 0;
  const double pd = config.rho_d * config.noise_w;
  const double pu = config.rho_u * config.noise_w;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t idx = static_cast<size_t>(k) * K + i;
      e += pd * vars.aux.v_d[idx] + pu * vars.aux.v_u[idx];
    }
    e += models::compute_energy(vars.f[k], config.L, config.d_samples(k),
                                config.c_cycles(k), config.alpha);
  }
  const auto v = penalty_values(vars, config);
  for (int i = 0; i < 4; ++i) e += penalty.lambda * penalty.gammas[i] * v[i];
  return e;
}

}  // namespace flmimo::sca
