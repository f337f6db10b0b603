#include "flmimo/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace flmimo {

SbVariables SbVariables::zeros(int K) {
  SbVariables v;
  v.schedule = SessionSchedule(K);
  const size_t kk = static_cast<size_t>(K) * K;
  v.eta.assign(kk, 0.0);
  v.zeta.assign(kk, 0.0);
  v.f.assign(K, 0.0);
  v.s_d.assign(kk, 0.0);
  v.s_u.assign(kk, 0.0);
  v.t_d.assign(K, 0.0);
  v.t_u.assign(K, 0.0);
  auto& x = v.aux;
  for (auto* m : {&x.r_hat_d, &x.r_tld_d, &x.t_hat_d, &x.t_tld_d, &x.r_hat_u,
                  &x.r_tld_u, &x.t_hat_u, &x.t_tld_u, &x.v_d, &x.v_u}) {
    m->assign(kk, 0.0);
  }
  x.q1.assign(K, 0.0);
  x.q2.assign(K, 0.0);
  return v;
}

std::string EnergyBreakdown::csv_row(const std::string& design) const {
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g", design.c_str(),
                e_dl, e_comp, e_ul, total);
  return buf;
}

}  // namespace flmimo

namespace flmimo::models {

namespace {

constexpr double kBig = 1e30;

double log2_rate(double pre_bw, double sinr) { return pre_bw * std::log2(1.0 + sinr); }

}  // namespace

double rate_dl_session_relaxed(const ChannelState& state, const NetworkConfig& config,
                               std::span<const double> eta_i, int n_active, int k) {
  if (config.M <= n_active) {
    throw InfeasibleError("rate_dl_session: zero-forcing needs M > active-set size");
  }
  double sum = 0;
  for (double e : eta_i) sum += e;
  const double num = (config.M - n_active) * config.rho_d * state.sigma2_dl_hat[k] * eta_i[k];
  const double den = config.rho_d * (state.beta[k] - state.sigma2_dl_hat[k]) * sum + 1.0;
  const double pre = (config.tau_c - config.tau_dp) / config.tau_c * config.bandwidth_hz;
  return log2_rate(pre, num / den);
}

double rate_ul_session_relaxed(const ChannelState& state, const NetworkConfig& config,
                               std::span<const double> zeta_j, int n_active, int k) {
  if (config.M <= n_active) {
    throw InfeasibleError("rate_ul_session: zero-forcing needs M > active-set size");
  }
  double interf = 0;
  for (int l = 0; l < state.K(); ++l) {
    interf += (state.beta[l] - state.sigma2_ul_bar[l]) * zeta_j[l];
  }
  const double num = (config.M - n_active) * config.rho_u * state.sigma2_ul_bar[k] * zeta_j[k];
  const double den = config.rho_u * interf + 1.0;
  const double pre = (config.tau_c - config.tau_up) / config.tau_c * config.bandwidth_hz;
  return log2_rate(pre, num / den);
}

double rate_dl_session(const ChannelState& state, const NetworkConfig& config,
                       std::span<const double> eta_i,
                       const std::vector<int>& active, int k) {
  if (std::find(active.begin(), active.end(), k) == active.end()) {
    throw std::domain_error("rate_dl_session: UE not in the active set");
  }
  if (config.M <= static_cast<int>(active.size())) {
    throw InfeasibleError("rate_dl_session: zero-forcing needs M > active-set size");
  }
  double sum = 0;
  for (int l : active) sum += eta_i[l];
  const double num =
      (config.M - static_cast<int>(active.size())) * config.rho_d * state.sigma2_dl_hat[k] * eta_i[k];
  const double den = config.rho_d * (state.beta[k] - state.sigma2_dl_hat[k]) * sum + 1.0;
  const double pre = (config.tau_c - config.tau_dp) / config.tau_c * config.bandwidth_hz;
  return log2_rate(pre, num / den);
}

double rate_ul_session(const ChannelState& state, const NetworkConfig& config,
                       std::span<const double> zeta_j,
                       const std::vector<int>& active, int k) {
  if (std::find(active.begin(), active.end(), k) == active.end()) {
    throw std::domain_error("rate_ul_session: UE not in the active set");
  }
  if (config.M <= static_cast<int>(active.size())) {
    throw InfeasibleError("rate_ul_session: zero-forcing needs M > active-set size");
  }
  double interf = 0;
  for (int l : active) {
    interf += (state.beta[l] - state.sigma2_ul_bar[l]) * zeta_j[l];
  }
  const double num =
      (config.M - static_cast<int>(active.size())) * config.rho_u * state.sigma2_ul_bar[k] * zeta_j[k];
  const double den = config.rho_u * interf + 1.0;
  const double pre = (config.tau_c - config.tau_up) / config.tau_c * config.bandwidth_hz;
  return log2_rate(pre, num / den);
}

std::vector<double> rate_dl_single(const ChannelState& state, const NetworkConfig& config,
                                   std::span<const double> eta) {
  const int K = state.K();
  std::vector<double> r(K);
  for (int k = 0; k < K; ++k) r[k] = rate_dl_session_relaxed(state, config, eta, K, k);
  return r;
}

std::vector<double> rate_ul_single(const ChannelState& state, const NetworkConfig& config,
                                   std::span<const double> zeta) {
  const int K = state.K();
  std::vector<double> r(K);
  for (int k = 0; k < K; ++k) r[k] = rate_ul_session_relaxed(state, config, zeta, K, k);
  return r;
}

double compute_time(double f_k, int L, double d_k, double c_k) {
  if (!(f_k > 0)) throw std::domain_error("compute_time: frequency must be positive");
  return L * d_k * c_k / f_k;
}

double compute_energy(double f_k, int L, double d_k, double c_k, double alpha) {
  if (f_k < 0) throw std::domain_error("compute_energy: frequency must be nonnegative");
  return L * (alpha / 2.0) * c_k * d_k * f_k * f_k;
}

EnergyBreakdown energy_sb(const SbVariables& vars, const ChannelState& state,
                          const NetworkConfig& config) {
  const int K = vars.K();
  if (K != config.K || K != state.K()) {
    throw ValidationError("energy_sb: dimension mismatch");
  }
  constexpr double kTol = 1e-6;
  for (int i = 0; i < K; ++i) {
    double sum = 0;
    for (int k = 0; k < K; ++k) sum += vars.eta[static_cast<size_t>(k) * K + i];
    if (sum > 1.0 + kTol) throw ValidationError("energy_sb: downlink power sum exceeds 1");
  }
  for (size_t idx = 0; idx < vars.eta.size(); ++idx) {
    if (vars.eta[idx] < -kTol || vars.zeta[idx] < -kTol ||
        vars.zeta[idx] > 1.0 + kTol || vars.s_d[idx] < -kTol * config.s_d_bits ||
        vars.s_u[idx] < -kTol * config.s_u_bits) {
      throw ValidationError("energy_sb: variable bound violated");
    }
  }
  for (int i = 0; i < K; ++i) {
    if (vars.t_d[i] < -kTol || vars.t_u[i] < -kTol) {
      throw ValidationError("energy_sb: negative session duration");
    }
  }

  EnergyBreakdown e;
  const double pd = config.rho_d * config.noise_w;
  const double pu = config.rho_u * config.noise_w;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t idx = static_cast<size_t>(k) * K + i;
      e.e_dl += pd * vars.eta[idx] * vars.schedule.a[idx] * vars.t_d[i];
      e.e_ul += pu * vars.zeta[idx] * vars.schedule.b[idx] * vars.t_u[i];
    }
    e.e_comp += compute_energy(vars.f[k], config.L, config.d_samples(k),
                               config.c_cycles(k), config.alpha);
  }
  e.total = e.e_dl + e.e_comp + e.e_ul;
  return e;
}

EnergyBreakdown energy_single(const SingleSessionVariables& vars,
                              const ChannelState& state, const NetworkConfig& config) {
  const int K = vars.K();
  if (K != config.K || K != state.K()) {
    throw ValidationError("energy_single: dimension mismatch");
  }
  const std::vector<double> rd = rate_dl_single(state, config, vars.eta);
  const std::vector<double> ru = rate_ul_single(state, config, vars.zeta);
  EnergyBreakdown e;
  const double pd = config.rho_d * config.noise_w;
  const double pu = config.rho_u * config.noise_w;
  for (int k = 0; k < K; ++k) {
    if (vars.eta[k] > 0) {
      if (!(rd[k] > 0)) throw InfeasibleError("energy_single: zero downlink rate with data pending");
      e.e_dl += pd * vars.eta[k] * config.s_d_bits / rd[k];
    }
    if (vars.zeta[k] > 0) {
      if (!(ru[k] > 0)) throw InfeasibleError("energy_single: zero uplink rate with data pending");
      e.e_ul += pu * vars.zeta[k] * config.s_u_bits / ru[k];
    }
    e.e_comp += compute_energy(vars.f[k], config.L, config.d_samples(k),
                               config.c_cycles(k), config.alpha);
  }
  e.total = e.e_dl + e.e_comp + e.e_ul;
  return e;
}

double FeasibilityReport::max_inequality() const {
  return std::max({power_residual, qos_residual, sync_residual});
}

double FeasibilityReport::max_residual() const {
  return std::max({schedule_residual, power_residual, data_residual,
                   rate_time_residual, time_equality_residual, qos_residual,
                   sync_residual});
}

std::string FeasibilityReport::summary() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "schedule=%.3g power=%.3g data=%.3g rate_time=%.3g "
                "time_eq=%.3g qos=%.3g sync=%.3g",
                schedule_residual, power_residual, data_residual,
                rate_time_residual, time_equality_residual, qos_residual,
                sync_residual);
  return buf;
}

FeasibilityReport validate_schedule_feasibility(const SbVariables& vars,
                                                const ChannelState& state,
                                                const NetworkConfig& config) {
  const int K = vars.K();
  FeasibilityReport rep;
  auto& sched = vars.schedule;

  // Session structure on (a, b).
  double sr = 0;
  for (int k = 0; k < K; ++k) {
    sr = std::max(sr, std::abs(sched.A(k, 0) - 1.0));
    sr = std::max(sr, std::abs(sched.B(k, K - 1) - 1.0));
    for (int i = 0; i < K; ++i) {
      sr = std::max(sr, std::max(0.0, -sched.A(k, i)));
      sr = std::max(sr, std::max(0.0, sched.A(k, i) - 1.0));
      sr = std::max(sr, std::max(0.0, -sched.B(k, i)));
      sr = std::max(sr, std::max(0.0, sched.B(k, i) - 1.0));
      if (i >= 1) {
        sr = std::max(sr, std::max(0.0, sched.A(k, i) - sched.A(k, i - 1)));
        sr = std::max(sr, std::max(0.0, sched.B(k, i - 1) - sched.B(k, i)));
      }
    }
  }
  for (int i = 0; i < K; ++i) {
    double sa = 0, sb = 0;
    for (int k = 0; k < K; ++k) {
      sa += sched.A(k, i);
      sb += sched.B(k, i);
    }
    sr = std::max(sr, std::abs(sa - (K - i)));
    sr = std::max(sr, std::abs(sb - (i + 1)));
  }
  rep.schedule_residual = sr;

  // Power families.
  double pr = 0;
  for (int i = 0; i < K; ++i) {
    double sum = 0;
    for (int k = 0; k < K; ++k) sum += vars.eta[static_cast<size_t>(k) * K + i];
    pr = std::max(pr, sum - 1.0);
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t idx = static_cast<size_t>(k) * K + i;
      pr = std::max(pr, vars.eta[idx] - sched.a[idx]);
      pr = std::max(pr, vars.zeta[idx] - sched.b[idx]);
      pr = std::max(pr, -vars.eta[idx]);
      pr = std::max(pr, -vars.zeta[idx]);
      pr = std::max(pr, vars.zeta[idx] - 1.0);
    }
    pr = std::max(pr, -vars.f[k] / config.f_max);
    pr = std::max(pr, (vars.f[k] - config.f_max) / config.f_max);
  }
  rep.power_residual = std::max(0.0, pr);

  // Data conservation and per-session rate-time consistency.
  double dr = 0, rt = 0;
  std::vector<double> eta_i(K), zeta_j(K);
  for (int k = 0; k < K; ++k) {
    double sd = 0, su = 0;
    for (int i = 0; i < K; ++i) {
      sd += vars.s_d[static_cast<size_t>(k) * K + i];
      su += vars.s_u[static_cast<size_t>(k) * K + i];
    }
    dr = std::max(dr, std::abs(sd - config.s_d_bits) / config.s_d_bits);
    dr = std::max(dr, std::abs(su - config.s_u_bits) / config.s_u_bits);
  }
  for (int i = 0; i < K; ++i) {
    for (int k = 0; k < K; ++k) {
      eta_i[k] = vars.eta[static_cast<size_t>(k) * K + i];
      zeta_j[k] = vars.zeta[static_cast<size_t>(k) * K + i];
    }
    for (int k = 0; k < K; ++k) {
      const size_t idx = static_cast<size_t>(k) * K + i;
      const double rd = rate_dl_session_relaxed(state, config, eta_i, K - i, k);
      rt = std::max(rt, std::abs(vars.s_d[idx] - rd * sched.a[idx] * vars.t_d[i]) /
                            config.s_d_bits);
      const double ru = rate_ul_session_relaxed(state, config, zeta_j, i + 1, k);
      rt = std::max(rt, std::abs(vars.s_u[idx] - ru * sched.b[idx] * vars.t_u[i]) /
                            config.s_u_bits);
    }
  }
  rep.data_residual = dr;
  rep.rate_time_residual = rt;

  // Per-UE timing, the shared round-duration variable, and the QoS bound.
  double teq = 0, qos = 0;
  double max_dl = -kBig, min_dl_plus_c = kBig;
  for (int k = 0; k < K; ++k) {
    double dl = 0, ul = 0;
    for (int i = 0; i < K; ++i) {
      const size_t idx = static_cast<size_t>(k) * K + i;
      dl += sched.a[idx] * vars.t_d[i];
      ul += sched.b[idx] * vars.t_u[i];
    }
    const double tc = vars.f[k] > 0
                          ? compute_time(vars.f[k], config.L, config.d_samples(k), config.c_cycles(k))
                          : kBig;
    const double busy = dl + tc + ul;
    teq = std::max(teq, std::abs(busy - vars.aux.t));
    qos = std::max(qos, busy - config.t_qos_s);
    max_dl = std::max(max_dl, dl);
    min_dl_plus_c = std::min(min_dl_plus_c, dl + tc);
  }
  qos = std::max(qos, vars.aux.t - config.t_qos_s);
  rep.time_equality_residual = teq;
  rep.qos_residual = std::max(0.0, qos);
  rep.sync_residual = std::max(0.0, max_dl - min_dl_plus_c);
  return rep;
}

FeasibilityReport validate_schedule_feasibility(const SingleSessionVariables& vars,
                                                const ChannelState& state,
                                                const NetworkConfig& config) {
  const int K = vars.K();
  FeasibilityReport rep;

  double pr = 0, sum_eta = 0;
  for (int k = 0; k < K; ++k) {
    sum_eta += vars.eta[k];
    pr = std::max(pr, -vars.eta[k]);
    pr = std::max(pr, -vars.zeta[k]);
    pr = std::max(pr, vars.zeta[k] - 1.0);
    pr = std::max(pr, -vars.f[k] / config.f_max);
    pr = std::max(pr, (vars.f[k] - config.f_max) / config.f_max);
  }
  pr = std::max(pr, sum_eta - 1.0);
  rep.power_residual = std::max(0.0, pr);

  const std::vector<double> rd = rate_dl_single(state, config, vars.eta);
  const std::vector<double> ru = rate_ul_single(state, config, vars.zeta);
  std::vector<double> td(K), tu(K), tc(K);
  for (int k = 0; k < K; ++k) {
    td[k] = rd[k] > 0 ? config.s_d_bits / rd[k] : kBig;
    tu[k] = ru[k] > 0 ? config.s_u_bits / ru[k] : kBig;
    tc[k] = vars.f[k] > 0
                ? compute_time(vars.f[k], config.L, config.d_samples(k), config.c_cycles(k))
                : kBig;
  }
  double qos = 0;
  if (vars.design == SingleDesign::kSynchronous) {
    const double step_sum = *std::max_element(td.begin(), td.end()) +
                            *std::max_element(tc.begin(), tc.end()) +
                            *std::max_element(tu.begin(), tu.end());
    qos = step_sum - config.t_qos_s;
    rep.sync_residual = 0;  // implied by the step-by-step structure
  } else {
    for (int k = 0; k < K; ++k) qos = std::max(qos, td[k] + tc[k] + tu[k] - config.t_qos_s);
    double max_dl = -kBig, min_dl_plus_c = kBig;
    for (int k = 0; k < K; ++k) {
      max_dl = std::max(max_dl, td[k]);
      min_dl_plus_c = std::min(min_dl_plus_c, td[k] + tc[k]);
    }
    rep.sync_residual = std::max(0.0, max_dl - min_dl_plus_c);
  }
  rep.qos_residual = std::max(0.0, qos);
  return rep;
}

}  // namespace flmimo::models
