/**
 * @file sca.hpp
 * @brief Successive convex approximation engines for the three designs.
 *
 * Each outer iteration linearizes the nonconvex pieces around the current
 * iterate (rate bounds, bilinear products, reciprocals), assembles a
 * structured convex subproblem, and solves it with the barrier solver. The
 * session-based design carries the binary-relaxation penalties V1..V4 in a
 * weighted Lagrangian; the single-session designs are penalty-free.
 *
 * Internally all subproblems are built on normalized variables: rates in
 * units of the effective bandwidth pre*B (so a unit rate is one bit per
 * channel use), payload sizes in units of (rate unit * 1 s), frequencies in
 * units of Scaling::f_unit, times in seconds. Penalty values V1..V4 are
 * reported in these normalized units.
 */
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>

#include "flmimo/cvx.hpp"
#include "flmimo/types.hpp"

namespace flmimo::sca {

struct PenaltyConfig {
  double lambda = 1.0;
  std::array<double, 4> gammas{0.1, 0.01, 0.01, 0.01};
  double epsilon = 1e-3;  // acceptance threshold for V1..V4
};

struct ScaTrace {
  std::vector<double> objective;                 // Lagrangian per iteration
  std::vector<std::array<double, 4>> penalties;  // V1..V4 per iteration
  int iterations = 0;
  double lambda_final = 0;  // after any escalation
  std::string termination;

  // CSV schema: iter,objective,V1,V2,V3,V4
  void write_csv(std::ostream& os) const;
};

// Unit system shared by the builders and the packers.
struct Scaling {
  double rate_unit_d = 0;  // (tau_c - tau_dp)/tau_c * B   (bit/s)
  double rate_unit_u = 0;
  double f_unit = 0;       // Hz
  double s_d = 0, s_u = 0;  // payloads in rate-unit-seconds

  static Scaling from(const NetworkConfig& config);
};

// ---------------------------------------------------------------------------
// Bound-emission primitives (unit-tested for tightness and dominance).
// ---------------------------------------------------------------------------

// Data for one SINR log-rate bound: the numerator U(x) and denominator-plus-
// noise P(x) as affine forms of the packed variables, their values at the
// linearization point, and the rate prefactor (already divided by ln 2).
struct RateBoundData {
  double pref = 0;  // multiplies log(1 + U/P); normalized rates use 1/ln2
  double u0 = 0, p0 = 0;
  cvx::AffForm u, p;
};

// Emits (expr <= 0) encoding r <= lower-bound-of-rate around the iterate:
// concave in (U, P), tight at (u0, p0). Throws std::domain_error when the
// iterate is degenerate (u0 or p0 not strictly positive).
cvx::ConvexExpr lower_bound_rate(const RateBoundData& d, int r_index);

// Emits (expr <= 0) encoding upper-bound-of-rate <= r, convex via -log P.
cvx::ConvexExpr upper_bound_rate(const RateBoundData& d, int r_index);

// Convex surrogates of the bilinear inequalities around (x0, y0) >= 0:
//   xy_minus_z majorizes x*y - z,   z_minus_xy majorizes z - x*y.
// Both are tight at (x0, y0, any z). Throws std::domain_error on negative
// linearization values.
struct BilinearSurrogates {
  cvx::ConvexExpr xy_minus_z;
  cvx::ConvexExpr z_minus_xy;
};
BilinearSurrogates bilinear_bounds(const cvx::AffForm& x, const cvx::AffForm& y,
                                   const cvx::AffForm& z, double x0, double y0);

// Affine lower bound of 1/x at x0 > 0: returns (c0, c1) with
// c0 + c1*x <= 1/x for all x > 0, tight at x0.
std::pair<double, double> reciprocal_bound(double x0);

// ---------------------------------------------------------------------------
// Variable packings.
// ---------------------------------------------------------------------------

// Session-based packing. The first-session downlink indicators and the
// last-session uplink indicators are structurally one, so they are pinned
// constants rather than variables; everything else follows the full variable
// family. Nominal (unreduced) count: 16K^2 + 5K + 2; packed: 16K^2 + 3K + 2.
struct SbLayout {
  int K = 0;
  explicit SbLayout(int k) : K(k) {}

  // a has columns 1..K-1 (column 0 pinned), b has columns 0..K-2.
  int a(int k, int i) const { return (i - 1) * K + k; }
  int b(int k, int j) const { return K * (K - 1) + j * K + k; }
  int eta(int k, int i) const { return 2 * K * (K - 1) + i * K + k; }
  int zeta(int k, int j) const { return eta(0, K) + j * K + k; }
  int s_d(int k, int i) const { return zeta(0, K) + i * K + k; }
  int s_u(int k, int j) const { return s_d(0, K) + j * K + k; }
  int r_hat_d(int k, int i) const { return s_u(0, K) + i * K + k; }
  int r_tld_d(int k, int i) const { return r_hat_d(0, K) + i * K + k; }
  int t_hat_d(int k, int i) const { return r_tld_d(0, K) + i * K + k; }
  int t_tld_d(int k, int i) const { return t_hat_d(0, K) + i * K + k; }
  int r_hat_u(int k, int j) const { return t_tld_d(0, K) + j * K + k; }
  int r_tld_u(int k, int j) const { return r_hat_u(0, K) + j * K + k; }
  int t_hat_u(int k, int j) const { return r_tld_u(0, K) + j * K + k; }
  int t_tld_u(int k, int j) const { return t_hat_u(0, K) + j * K + k; }
  int v_d(int k, int i) const { return t_tld_u(0, K) + i * K + k; }
  int v_u(int k, int j) const { return v_d(0, K) + j * K + k; }
  int t_d(int i) const { return v_u(0, K) + i; }
  int t_u(int j) const { return t_d(K) + j; }
  int f(int k) const { return t_u(K) + k; }
  int q1(int k) const { return f(K) + k; }
  int q2(int k) const { return q1(K) + k; }
  int t() const { return q2(K); }
  int q() const { return t() + 1; }
  int n() const { return q() + 1; }
};

std::vector<double> pack_sb(const SbVariables& vars, const NetworkConfig& config);
SbVariables unpack_sb(std::span<const double> x, const NetworkConfig& config);

// Single-session packing: eta, zeta, r_d, r_u, f, omega_d, omega_u blocks of
// K, then (q, q1, q2) for the asynchronous design (9K+1 variables) or
// (t_d, t_c, t_u) for the synchronous one (7K+3; the nominal count is 7K+4).
struct SingleLayout {
  int K = 0;
  SingleDesign design = SingleDesign::kAsynchronous;
  SingleLayout(int k, SingleDesign d) : K(k), design(d) {}

  int eta(int k) const { return k; }
  int zeta(int k) const { return K + k; }
  int r_d(int k) const { return 2 * K + k; }
  int r_u(int k) const { return 3 * K + k; }
  int f(int k) const { return 4 * K + k; }
  int omega_d(int k) const { return 5 * K + k; }
  int omega_u(int k) const { return 6 * K + k; }
  // Asynchronous tail.
  int q() const { return 7 * K; }
  int q1(int k) const { return 7 * K + 1 + k; }
  int q2(int k) const { return 8 * K + 1 + k; }
  // Synchronous tail.
  int t_d() const { return 7 * K; }
  int t_c() const { return 7 * K + 1; }
  int t_u() const { return 7 * K + 2; }
  int n() const { return design == SingleDesign::kAsynchronous ? 9 * K + 1 : 7 * K + 3; }
};

std::vector<double> pack_single(const SingleSessionVariables& vars,
                                const NetworkConfig& config);
SingleSessionVariables unpack_single(std::span<const double> x,
                                     const NetworkConfig& config, SingleDesign design);

// ---------------------------------------------------------------------------
// Subproblem builders.
// ---------------------------------------------------------------------------

struct BuildResult {
  cvx::SubproblemSpec spec;
  int nominal_vars = 0;  // unreduced variable-count formula
  int packed_vars = 0;   // spec.n after pinning structural constants
};

// Convex subproblem of the session-based Lagrangian around the iterate.
// Throws std::domain_error when the iterate has nonpositive powers,
// frequencies, or session times at a linearization point.
BuildResult build_sb_subproblem(const ChannelState& state, const NetworkConfig& config,
                                const PenaltyConfig& penalty, const SbVariables& iterate);

BuildResult build_asyn_subproblem(const ChannelState& state, const NetworkConfig& config,
                                  const SingleSessionVariables& iterate);
BuildResult build_syn_subproblem(const ChannelState& state, const NetworkConfig& config,
                                 const SingleSessionVariables& iterate);

// ---------------------------------------------------------------------------
// Initial points, penalties, algorithms.
// ---------------------------------------------------------------------------

// Structured strictly feasible starting points (seeded jitter decorrelates
// runs). Throws InfeasibleError when the scenario cannot meet t_qos.
SbVariables initial_point_sb(const ChannelState& state, const NetworkConfig& config,
                             std::uint64_t seed);
SingleSessionVariables initial_point_single(const ChannelState& state,
                                            const NetworkConfig& config,
                                            SingleDesign design, std::uint64_t seed);

// V1..V4 evaluated at a point (normalized units; see file comment).
std::array<double, 4> penalty_values(const SbVariables& vars, const NetworkConfig& config);

// Lagrangian value E_tilde + lambda * sum_i gamma_i V_i at a point.
double lagrangian_value(const SbVariables& vars, const NetworkConfig& config,
                        const PenaltyConfig& penalty);

struct ScaOptions {
  double tol = 1e-4;       // relative objective change for termination
  int max_iter = 100;
  std::uint64_t seed = 0;
  double inner_tol = 1e-6;        // subproblem tolerance at convergence
  double inner_tol_loose = 1e-5;  // subproblem tolerance while far from done
  int max_lambda_escalations = 3;
};

struct SbResult {
  SbVariables vars;
  ScaTrace trace;
};

// Session-based design: iterates the penalized convex subproblems until the
// relative Lagrangian change drops below tol. If any V_i exceeds
// penalty.epsilon at convergence the multiplier is raised tenfold and the
// loop warm-starts, up to max_lambda_escalations times.
SbResult run_algorithm1(const ChannelState& state, const NetworkConfig& config,
                        const PenaltyConfig& penalty, const ScaOptions& opts);

struct SingleResult {
  SingleSessionVariables vars;
  ScaTrace trace;
};

SingleResult run_algorithm2(const ChannelState& state, const NetworkConfig& config,
                            SingleDesign design, const ScaOptions& opts);

// Rounds the relaxed schedule at 0.5, repairs it to the one-UE-per-session
// structure, recomputes session times, splits, and frequencies in closed
// form with the schedule fixed, and returns a point feasible for the
// original mixed-integer program. Throws ValidationError when the repair
// cannot produce nonnegative session times (offending session named).
SbVariables binarize_and_polish(const SbVariables& vars, const ChannelState& state,
                                const NetworkConfig& config, double tol);

}  // namespace flmimo::sca
