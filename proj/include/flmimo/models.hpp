/**
 * @file models.hpp
 * @brief Closed-form rate, delay, and energy models for the three
 *        transmission designs.
 *
 * Zero-forcing achievable rates with MMSE channel estimates:
 *   R = pre * B * log2(1 + SINR), pre = (tau_c - tau_p) / tau_c,
 * downlink SINR for UE k in a session with active set A:
 *   (M-|A|) rho_d sig_k^2 eta_k / (rho_d (beta_k - sig_k^2) sum_l eta_l + 1),
 * uplink SINR:
 *   (M-|A|) rho_u sig_k^2 zeta_k / (rho_u sum_l (beta_l - sig_l^2) zeta_l + 1).
 *
 * Convention: a UE allocated zero power carries no data, so its delay and
 * energy terms are 0 (the 0/0 case resolves to 0).
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "flmimo/types.hpp"

namespace flmimo::models {

// Achievable downlink rate (bit/s) of UE k in a session with the given
// active set. eta_i must be zero outside the active set. Throws
// InfeasibleError if M <= |active| and std::domain_error if k is not active.
double rate_dl_session(const ChannelState& state, const NetworkConfig& config,
                       std::span<const double> eta_i,
                       const std::vector<int>& active, int k);

double rate_ul_session(const ChannelState& state, const NetworkConfig& config,
                       std::span<const double> zeta_j,
                       const std::vector<int>& active, int k);

// Relaxed evaluators used during optimization: the active-set size enters as
// the structural constant n_active (K-i+1 downlink, j uplink) and the
// interference sums run over all UEs, which coincides with the set-based
// forms whenever inactive UEs hold zero power.
double rate_dl_session_relaxed(const ChannelState& state, const NetworkConfig& config,
                               std::span<const double> eta_i, int n_active, int k);
double rate_ul_session_relaxed(const ChannelState& state, const NetworkConfig& config,
                               std::span<const double> zeta_j, int n_active, int k);

// Single-session specializations (all K UEs active).
std::vector<double> rate_dl_single(const ChannelState& state, const NetworkConfig& config,
                                   std::span<const double> eta);
std::vector<double> rate_ul_single(const ChannelState& state, const NetworkConfig& config,
                                   std::span<const double> zeta);

// L * D_k * c_k / f_k (seconds). Throws std::domain_error for f_k <= 0.
double compute_time(double f_k, int L, double d_k, double c_k);

// L * (alpha/2) * c_k * D_k * f_k^2 (joules). Throws for f_k < 0.
double compute_energy(double f_k, int L, double d_k, double c_k, double alpha);

// Total energy of one round in the session-based design. Throws
// ValidationError when vars violate the schedule/power invariants.
EnergyBreakdown energy_sb(const SbVariables& vars, const ChannelState& state,
                          const NetworkConfig& config);

// Total energy of one round in the asynchronous/synchronous designs.
EnergyBreakdown energy_single(const SingleSessionVariables& vars,
                              const ChannelState& state, const NetworkConfig& config);

/**
 * Per-constraint residuals of a candidate operating point. Times are in
 * seconds, data residuals relative to the payload size, power residuals
 * dimensionless. Inequality residuals are clamped at 0 when satisfied.
 * time_equality_residual reports the worst |per-UE busy time - t| gap of the
 * session-based design; during relaxed optimization that gap is driven by a
 * penalty and only vanishes at convergence.
 */
struct FeasibilityReport {
  double schedule_residual = 0;       // session-structure constraints on (a, b)
  double power_residual = 0;          // power sums, caps, eta<=a, zeta<=b
  double data_residual = 0;           // |sum_i S_{k,i} - S| / S
  double rate_time_residual = 0;      // |S - R a t| / S over all (k, i)
  double time_equality_residual = 0;  // max_k |busy_k - t| (seconds)
  double qos_residual = 0;            // violation of the QoS bound (seconds)
  double sync_residual = 0;           // violation of the uplink-start ordering (s)

  double max_inequality() const;
  double max_residual() const;
  bool feasible(double tol) const { return max_residual() <= tol; }
  std::string summary() const;
};

FeasibilityReport validate_schedule_feasibility(const SbVariables& vars,
                                                const ChannelState& state,
                                                const NetworkConfig& config);

FeasibilityReport validate_schedule_feasibility(const SingleSessionVariables& vars,
                                                const ChannelState& state,
                                                const NetworkConfig& config);

}  // namespace flmimo::models
