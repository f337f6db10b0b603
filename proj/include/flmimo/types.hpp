/**
 * @file types.hpp
 * @brief Scenario configuration, channel statistics, and decision-variable
 *        containers shared across the library.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flmimo {

// Raised when a requested operating point cannot satisfy the model
// constraints (e.g. zero-forcing with more users than antennas).
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when decision variables violate their structural invariants.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/**
 * All scenario constants for one cell. Powers rho_d/rho_u/rho_p are
 * normalized by the noise power (watts transmitted / watts of noise);
 * noise_w keeps the absolute noise level so energies come out in joules.
 */
struct NetworkConfig {
  int M = 75;               // BS antennas
  int K = 10;               // single-antenna UEs
  double side_km = 0.25;    // square side D
  double tau_c = 200;       // coherence block (samples)
  double tau_dp = 10;       // downlink pilot length (samples)
  double tau_up = 10;       // uplink pilot length (samples)
  double bandwidth_hz = 20e6;
  double rho_d = 0;         // normalized BS power
  double rho_u = 0;         // normalized UE power
  double rho_p = 0;         // normalized pilot power
  double noise_w = 0;       // N0 (W)
  double s_d_bits = 8e6;    // global update size
  double s_u_bits = 8e6;    // local update size
  double t_qos_s = 1.0;     // max round duration
  int L = 5;                // local computing rounds
  double alpha = 5e-21;     // capacitance coefficient (E_C = L*(alpha/2)*c*D*f^2)
  double f_max = 5e9;       // cycles/s
  std::vector<double> d_k_samples{1e4};  // scalar broadcasts to all UEs
  std::vector<double> c_k_cycles{20};

  // Reference scenario: 10 W BS, 0.2 W UE and pilot power over -92 dBm noise,
  // 20 MHz carrier, pilot lengths equal to K.
  static NetworkConfig reference();

  // Throws std::invalid_argument with a reason on the first violated
  // invariant (M >= K, pilot lengths >= K and < tau_c, positivity, ...).
  void validate() const;

  double d_samples(int k) const {
    return d_k_samples[d_k_samples.size() == 1 ? 0 : static_cast<size_t>(k)];
  }
  double c_cycles(int k) const {
    return c_k_cycles[c_k_cycles.size() == 1 ? 0 : static_cast<size_t>(k)];
  }
  // L * D_k * c_k, the per-round cycle count of UE k.
  double cycles(int k) const { return L * d_samples(k) * c_cycles(k); }
};

struct UEPlacement {
  std::vector<double> distances_km;  // clipped to >= 0.035
  std::vector<double> shadowing_db;  // N(0, 7 dB)
  std::uint64_t seed = 0;
};

struct ChannelState {
  std::vector<double> beta;           // large-scale coefficients (linear)
  std::vector<double> sigma2_dl_hat;  // MMSE estimate variance, downlink pilots
  std::vector<double> sigma2_ul_bar;  // MMSE estimate variance, uplink pilots
  int K() const { return static_cast<int>(beta.size()); }
};

/**
 * Downlink/uplink participation indicators. Entries live in [0,1]; the
 * relaxed optimizer works with fractional values, validate/binarize enforce
 * the binary session structure (one UE leaves per downlink session, one UE
 * joins per uplink session).
 */
struct SessionSchedule {
  int K = 0;
  std::vector<double> a;  // K x K row-major, a[k*K + i]
  std::vector<double> b;

  SessionSchedule() = default;
  explicit SessionSchedule(int k)
      : K(k), a(static_cast<size_t>(k) * k, 0.0), b(static_cast<size_t>(k) * k, 0.0) {}
  double& A(int k, int i) { return a[static_cast<size_t>(k) * K + i]; }
  double A(int k, int i) const { return a[static_cast<size_t>(k) * K + i]; }
  double& B(int k, int j) { return b[static_cast<size_t>(k) * K + j]; }
  double B(int k, int j) const { return b[static_cast<size_t>(k) * K + j]; }
};

// Epigraph auxiliaries of the session-based program. Rates are in bit/s,
// times in seconds, matching the primary variables.
struct SbAux {
  std::vector<double> r_hat_d, r_tld_d, t_hat_d, t_tld_d;  // K x K
  std::vector<double> r_hat_u, r_tld_u, t_hat_u, t_tld_u;  // K x K
  std::vector<double> v_d, v_u;                            // K x K
  std::vector<double> q1, q2;                              // K
  double t = 0, q = 0;
};

struct SbVariables {
  SessionSchedule schedule;
  std::vector<double> eta;   // K x K downlink power coefficients
  std::vector<double> zeta;  // K x K uplink power coefficients
  std::vector<double> f;     // per-UE frequency (cycles/s)
  std::vector<double> s_d;   // K x K split sizes (bits)
  std::vector<double> s_u;   // K x K
  std::vector<double> t_d;   // per-session downlink durations (s)
  std::vector<double> t_u;   // per-session uplink durations (s)
  SbAux aux;

  int K() const { return schedule.K; }
  static SbVariables zeros(int K);
};

enum class SingleDesign { kAsynchronous, kSynchronous };

// Asynchronous designs carry (q, q1, q2); synchronous ones carry the
// step durations (t_d, t_c, t_u) instead.
struct SingleSessionVariables {
  SingleDesign design = SingleDesign::kAsynchronous;
  std::vector<double> eta, zeta, f;     // per UE
  std::vector<double> r_d, r_u;         // epigraph rates (bit/s)
  std::vector<double> omega_d, omega_u; // epigraph inverse rates (s/bit)
  std::vector<double> q1, q2;           // asynchronous only
  double q = 0;
  double t_d = 0, t_c = 0, t_u = 0;     // synchronous only

  int K() const { return static_cast<int>(eta.size()); }
};

struct EnergyBreakdown {
  double e_dl = 0;    // BS transmit energy (J)
  double e_comp = 0;  // sum of UE computing energies (J)
  double e_ul = 0;    // sum of UE transmit energies (J)
  double total = 0;

  std::string csv_row(const std::string& design) const;
};

}  // namespace flmimo
