#include "flmimo/heur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "flmimo/models.hpp"

namespace flmimo::heur {

namespace {

size_t cell(int K, int k, int i) { return static_cast<size_t>(k) * K + i; }

std::vector<double> inv_beta_weights(const ChannelState& state,
                                     const std::vector<char>& active) {
  const int K = state.K();
  std::vector<double> w(K, 0.0);
  double sum = 0;
  for (int k = 0; k < K; ++k) {
    if (active[k]) {
      w[k] = 1.0 / state.beta[k];
      sum += w[k];
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

}  // namespace

SbOutcome heu_sb(const ChannelState& state, const NetworkConfig& config) {
  const int K = config.K;
  if (config.M <= K) return {std::nullopt, "zero-forcing needs M > K"};
  SbVariables v = SbVariables::zeros(K);

  // Downlink: shed the highest-rate UE after each session.
  std::vector<char> active(K, 1);
  std::vector<double> rate_d(static_cast<size_t>(K) * K, 0.0);
  std::vector<double> eta_col(K);
  std::vector<int> exit_order(K, -1);
  for (int i = 0; i < K; ++i) {
    const auto w = inv_beta_weights(state, active);
    std::vector<int> act;
    for (int k = 0; k < K; ++k) {
      if (active[k]) act.push_back(k);
      eta_col[k] = active[k] ? w[k] : 0.0;
      v.schedule.A(k, i) = active[k] ? 1.0 : 0.0;
      v.eta[cell(K, k, i)] = eta_col[k];
    }
    int best = -1;
    double best_rate = -1.0;
    for (int k : act) {
      const double r = models::rate_dl_session(state, config, eta_col, act, k);
      rate_d[cell(K, k, i)] = r;
      if (r > best_rate) {
        best_rate = r;
        best = k;
      }
    }
    exit_order[i] = best;
    active[best] = 0;
  }

  // Uplink: construct backward from the final all-UE session, peeling the
  // highest-rate UE so it joins latest.
  std::fill(active.begin(), active.end(), 1);
  std::vector<double> rate_u(static_cast<size_t>(K) * K, 0.0);
  std::vector<int> entry_order(K, -1);  // entry_order[j] = UE joining at session j
  for (int j = K - 1; j >= 0; --j) {
    const auto w = inv_beta_weights(state, active);
    std::vector<int> act;
    for (int k = 0; k < K; ++k) {
      if (active[k]) act.push_back(k);
      eta_col[k] = active[k] ? w[k] : 0.0;
      v.schedule.B(k, j) = active[k] ? 1.0 : 0.0;
      v.zeta[cell(K, k, j)] = eta_col[k];
    }
    int best = -1;
    double best_rate = -1.0;
    for (int k : act) {
      const double r = models::rate_ul_session(state, config, eta_col, act, k);
      rate_u[cell(K, k, j)] = r;
      if (r > best_rate) {
        best_rate = r;
        best = k;
      }
    }
    entry_order[j] = best;
    active[best] = 0;
  }

  // Session lengths from the payload system; the exit ordering makes it
  // triangular (a general solve would return the same unique solution).
  for (int i = 0; i < K; ++i) {
    const int k = exit_order[i];
    double carried = 0;
    for (int p = 0; p < i; ++p) carried += rate_d[cell(K, k, p)] * v.t_d[p];
    const double pivot = rate_d[cell(K, k, i)];
    if (!(pivot > 0)) return {std::nullopt, "singular downlink session system"};
    v.t_d[i] = (config.s_d_bits - carried) / pivot;
    if (!(v.t_d[i] >= 0)) {
      return {std::nullopt, "negative downlink session duration"};
    }
  }
  for (int j = K - 1; j >= 0; --j) {
    const int k = entry_order[j];
    double carried = 0;
    for (int p = j + 1; p < K; ++p) carried += rate_u[cell(K, k, p)] * v.t_u[p];
    const double pivot = rate_u[cell(K, k, j)];
    if (!(pivot > 0)) return {std::nullopt, "singular uplink session system"};
    v.t_u[j] = (config.s_u_bits - carried) / pivot;
    if (!(v.t_u[j] >= 0)) {
      return {std::nullopt, "negative uplink session duration"};
    }
  }

  // Splits, frequencies, and bookkeeping auxiliaries.
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      const size_t c = cell(K, k, i);
      v.s_d[c] = rate_d[c] * v.schedule.A(k, i) * v.t_d[i];
      v.s_u[c] = rate_u[c] * v.schedule.B(k, i) * v.t_u[i];
      v.aux.r_hat_d[c] = rate_d[c];
      v.aux.r_tld_d[c] = rate_d[c];
      v.aux.r_hat_u[c] = rate_u[c];
      v.aux.r_tld_u[c] = rate_u[c];
      v.aux.t_hat_d[c] = v.schedule.A(k, i) * v.t_d[i];
      v.aux.t_tld_d[c] = v.aux.t_hat_d[c];
      v.aux.t_hat_u[c] = v.schedule.B(k, i) * v.t_u[i];
      v.aux.t_tld_u[c] = v.aux.t_hat_u[c];
      v.aux.v_d[c] = v.eta[c] * v.aux.t_tld_d[c];
      v.aux.v_u[c] = v.zeta[c] * v.aux.t_tld_u[c];
    }
  }
  double max_dl = 0;
  for (int k = 0; k < K; ++k) {
    double dl = 0, ul = 0;
    for (int i = 0; i < K; ++i) {
      dl += v.aux.t_hat_d[cell(K, k, i)];
      ul += v.aux.t_hat_u[cell(K, k, i)];
    }
    const double budget = config.t_qos_s - dl - ul;
    if (!(budget > 0)) return {std::nullopt, "transmission time exceeds the QoS budget"};
    v.f[k] = config.cycles(k) / budget;
    if (v.f[k] > config.f_max) return {std::nullopt, "computing frequency above f_max"};
    v.aux.q1[k] = dl;
    v.aux.q2[k] = config.cycles(k) / v.f[k];
    max_dl = std::max(max_dl, dl);
  }
  v.aux.t = config.t_qos_s;
  v.aux.q = max_dl;
  return {v, ""};
}

namespace {

SingleOutcome heu_single(const ChannelState& state, const NetworkConfig& config,
                         SingleDesign design) {
  const int K = config.K;
  if (config.M <= K) return {std::nullopt, "zero-forcing needs M > K"};
  SingleSessionVariables v;
  v.design = design;
  v.eta.resize(K);
  v.zeta.resize(K);
  v.f.resize(K);

  const std::vector<char> all(K, 1);
  const auto w = inv_beta_weights(state, all);
  for (int k = 0; k < K; ++k) {
    v.eta[k] = w[k];
    v.zeta[k] = w[k];
  }
  const auto rd = models::rate_dl_single(state, config, v.eta);
  const auto ru = models::rate_ul_single(state, config, v.zeta);
  std::vector<double> td(K), tu(K);
  for (int k = 0; k < K; ++k) {
    if (!(rd[k] > 0) || !(ru[k] > 0)) return {std::nullopt, "zero achievable rate"};
    td[k] = config.s_d_bits / rd[k];
    tu[k] = config.s_u_bits / ru[k];
  }

  for (int k = 0; k < K; ++k) {
    double budget;
    if (design == SingleDesign::kAsynchronous) {
      budget = config.t_qos_s - td[k] - tu[k];
    } else {
      budget = config.t_qos_s - *std::max_element(td.begin(), td.end()) -
               *std::max_element(tu.begin(), tu.end());
    }
    if (!(budget > 0)) return {std::nullopt, "transmission time exceeds the QoS budget"};
    v.f[k] = config.cycles(k) / budget;
    if (v.f[k] > config.f_max) return {std::nullopt, "computing frequency above f_max"};
  }

  v.r_d = rd;
  v.r_u = ru;
  v.omega_d.resize(K);
  v.omega_u.resize(K);
  for (int k = 0; k < K; ++k) {
    v.omega_d[k] = v.eta[k] / rd[k];
    v.omega_u[k] = v.zeta[k] / ru[k];
  }
  if (design == SingleDesign::kAsynchronous) {
    v.q1 = td;
    v.q2.resize(K);
    for (int k = 0; k < K; ++k) v.q2[k] = config.cycles(k) / v.f[k];
    v.q = *std::max_element(td.begin(), td.end());
  } else {
    v.t_d = *std::max_element(td.begin(), td.end());
    v.t_u = *std::max_element(tu.begin(), tu.end());
    v.t_c = 0;
    for (int k = 0; k < K; ++k) {
      v.t_c = std::max(v.t_c, config.cycles(k) / v.f[k]);
    }
  }
  return {v, ""};
}

}  // namespace

SingleOutcome heu_asyn(const ChannelState& state, const NetworkConfig& config) {
  return heu_single(state, config, SingleDesign::kAsynchronous);
}

SingleOutcome heu_syn(const ChannelState& state, const NetworkConfig& config) {
  return heu_single(state, config, SingleDesign::kSynchronous);
}

}  // namespace flmimo::heur
