#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "flmimo/models.hpp"
#include "flmimo/netgen.hpp"

using namespace flmimo;

namespace {

// Independent scalar evaluation of the downlink session rate, written out
// from the closed form rather than through the library path.
double oracle_rate_dl(const ChannelState& s, const NetworkConfig& c,
                      const std::vector<double>& eta, const std::vector<int>& active, int k) {
  double sum = 0;
  for (int l : active) sum += eta[l];
  const double sinr = (c.M - static_cast<double>(active.size())) * c.rho_d *
                      s.sigma2_dl_hat[k] * eta[k] /
                      (c.rho_d * (s.beta[k] - s.sigma2_dl_hat[k]) * sum + 1.0);
  return (c.tau_c - c.tau_dp) / c.tau_c * c.bandwidth_hz * std::log2(1.0 + sinr);
}

double oracle_rate_ul(const ChannelState& s, const NetworkConfig& c,
                      const std::vector<double>& zeta, const std::vector<int>& active, int k) {
  double interf = 0;
  for (int l : active) interf += (s.beta[l] - s.sigma2_ul_bar[l]) * zeta[l];
  const double sinr = (c.M - static_cast<double>(active.size())) * c.rho_u *
                      s.sigma2_ul_bar[k] * zeta[k] / (c.rho_u * interf + 1.0);
  return (c.tau_c - c.tau_up) / c.tau_c * c.bandwidth_hz * std::log2(1.0 + sinr);
}

ChannelState drop(const NetworkConfig& cfg, int seed) {
  return netgen::build_channel_state(cfg, netgen::place_ues(cfg, seed));
}

}  // namespace

TEST_CASE("downlink session rate basics") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 2;
  cfg.tau_dp = cfg.tau_up = 2;
  ChannelState s;
  s.beta = {1e-12, 1e-12};
  s.sigma2_dl_hat = {8e-13, 8e-13};
  s.sigma2_ul_bar = {8e-13, 8e-13};

  std::vector<double> eta = {0.0, 0.3};
  // Zero power means log2(1) = 0.
  CHECK(models::rate_dl_session(s, cfg, eta, {0, 1}, 0) == 0.0);

  // Perfect CSI, single active UE: SINR = (M-1) rho_d beta eta.
  ChannelState perfect = s;
  perfect.sigma2_dl_hat = perfect.beta;
  std::vector<double> eta1 = {0.5, 0.0};
  const double expected_sinr = (cfg.M - 1) * cfg.rho_d * s.beta[0] * 0.5;
  const double pre = (cfg.tau_c - cfg.tau_dp) / cfg.tau_c * cfg.bandwidth_hz;
  CHECK(models::rate_dl_session(perfect, cfg, eta1, {0}, 0) ==
        doctest::Approx(pre * std::log2(1 + expected_sinr)).epsilon(1e-12));

  // Symmetric UEs with equal power get equal rates, matching the oracle.
  std::vector<double> eq = {0.4, 0.4};
  const double r0 = models::rate_dl_session(s, cfg, eq, {0, 1}, 0);
  const double r1 = models::rate_dl_session(s, cfg, eq, {0, 1}, 1);
  CHECK(r0 == doctest::Approx(r1).epsilon(1e-14));
  CHECK(r0 == doctest::Approx(oracle_rate_dl(s, cfg, eq, {0, 1}, 0)).epsilon(1e-12));

  CHECK_THROWS_AS(models::rate_dl_session(s, cfg, eq, {1}, 0), std::domain_error);
  cfg.M = 2;
  CHECK_THROWS_AS(models::rate_dl_session(s, cfg, eq, {0, 1}, 0), InfeasibleError);
}

TEST_CASE("uplink session rate basics") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 3;
  cfg.tau_dp = cfg.tau_up = 3;
  const auto s = drop(cfg, 11);

  std::vector<double> z = {0.0, 0.9, 0.2};
  CHECK(models::rate_ul_session(s, cfg, z, {0, 1, 2}, 0) == 0.0);

  ChannelState perfect = s;
  perfect.sigma2_ul_bar = perfect.beta;
  std::vector<double> z1 = {0.7, 0.0, 0.0};
  const double pre = (cfg.tau_c - cfg.tau_up) / cfg.tau_c * cfg.bandwidth_hz;
  CHECK(models::rate_ul_session(perfect, cfg, z1, {0}, 0) ==
        doctest::Approx(pre * std::log2(1 + (cfg.M - 1) * cfg.rho_u * s.beta[0] * 0.7))
            .epsilon(1e-12));

  for (int k = 0; k < 3; ++k) {
    CHECK(models::rate_ul_session(s, cfg, z, {0, 1, 2}, k) ==
          doctest::Approx(oracle_rate_ul(s, cfg, z, {0, 1, 2}, k)).epsilon(1e-12));
  }
}

TEST_CASE("single-session rates equal session rates with the full set") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 5;
  cfg.tau_dp = cfg.tau_up = 5;
  const auto s = drop(cfg, 3);
  std::vector<double> eta = {0.1, 0.25, 0.05, 0.3, 0.2};
  std::vector<double> zeta = {0.9, 0.4, 1.0, 0.3, 0.6};
  std::vector<int> all = {0, 1, 2, 3, 4};
  const auto rd = models::rate_dl_single(s, cfg, eta);
  const auto ru = models::rate_ul_single(s, cfg, zeta);
  for (int k = 0; k < 5; ++k) {
    CHECK(rd[k] == models::rate_dl_session(s, cfg, eta, all, k));
    CHECK(ru[k] == models::rate_ul_session(s, cfg, zeta, all, k));
    CHECK(rd[k] == doctest::Approx(oracle_rate_dl(s, cfg, eta, all, k)).epsilon(1e-12));
  }

  // Identical UEs with equal powers see identical rates.
  ChannelState same;
  same.beta.assign(5, 2e-12);
  same.sigma2_dl_hat.assign(5, 1.5e-12);
  same.sigma2_ul_bar.assign(5, 1.5e-12);
  std::vector<double> eq(5, 0.2);
  const auto req = models::rate_dl_single(same, cfg, eq);
  for (int k = 1; k < 5; ++k) CHECK(req[k] == doctest::Approx(req[0]).epsilon(1e-14));
}

TEST_CASE("rate monotonicity in powers") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 3;
  cfg.tau_dp = cfg.tau_up = 3;
  const auto s = drop(cfg, 17);
  std::vector<double> eta = {0.2, 0.3, 0.1};
  const double base = models::rate_dl_session_relaxed(s, cfg, eta, 3, 0);
  auto up_own = eta;
  up_own[0] += 0.05;
  CHECK(models::rate_dl_session_relaxed(s, cfg, up_own, 3, 0) > base);
  auto up_other = eta;
  up_other[1] += 0.05;
  CHECK(models::rate_dl_session_relaxed(s, cfg, up_other, 3, 0) < base);
}

TEST_CASE("compute time and energy closed forms") {
  CHECK(models::compute_time(1e9, 5, 1e4, 20) == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(models::compute_time(2e9, 5, 1e4, 20) ==
        doctest::Approx(0.5 * models::compute_time(1e9, 5, 1e4, 20)).epsilon(1e-15));
  CHECK(models::compute_time(5e9, 5, 1e4, 20) == doctest::Approx(2e-4).epsilon(1e-15));
  CHECK_THROWS_AS(models::compute_time(0, 5, 1e4, 20), std::domain_error);

  CHECK(models::compute_energy(0, 5, 1e4, 20, 5e-21) == 0.0);
  const double e1 = models::compute_energy(1e9, 5, 1e4, 20, 5e-21);
  CHECK(models::compute_energy(2e9, 5, 1e4, 20, 5e-21) == doctest::Approx(4 * e1).epsilon(1e-14));
  // Full-speed computing with the reference constants:
  // 5 * (5e-21/2) * 20 * 1e4 * (5e9)^2 = 6.25e4 J.
  CHECK(models::compute_energy(5e9, 5, 1e4, 20, 5e-21) == doctest::Approx(6.25e4).epsilon(1e-14));
  CHECK_THROWS_AS(models::compute_energy(-1, 5, 1e4, 20, 5e-21), std::domain_error);
}

TEST_CASE("session-based energy matches a term-by-term reference sum") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 3;
  cfg.tau_dp = cfg.tau_up = 3;
  const auto s = drop(cfg, 23);
  const int K = 3;

  auto vars = SbVariables::zeros(K);
  // All-zero point costs nothing.
  auto zero = models::energy_sb(vars, s, cfg);
  CHECK(zero.total == 0.0);

  // Random feasible-ish point.
  std::mt19937_64 gen(5);
  auto u = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      vars.schedule.A(k, i) = (k >= i) ? 1.0 : 0.0;  // one UE leaves per session
      vars.schedule.B(k, i) = (k <= i) ? 1.0 : 0.0;
      vars.eta[static_cast<size_t>(k) * K + i] = vars.schedule.A(k, i) * u() / K;
      vars.zeta[static_cast<size_t>(k) * K + i] = vars.schedule.B(k, i) * u();
    }
    vars.f[k] = 1e6 + 1e6 * u();
  }
  vars.t_d = {0.05, 0.04, 0.03};
  vars.t_u = {0.02, 0.03, 0.06};

  const auto e = models::energy_sb(vars, s, cfg);
  double edl = 0, eul = 0, ec = 0;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) {
      edl += cfg.rho_d * cfg.noise_w * vars.eta[static_cast<size_t>(k) * K + i] *
             vars.schedule.A(k, i) * vars.t_d[i];
      eul += cfg.rho_u * cfg.noise_w * vars.zeta[static_cast<size_t>(k) * K + i] *
             vars.schedule.B(k, i) * vars.t_u[i];
    }
    ec += cfg.L * cfg.alpha / 2 * cfg.c_cycles(k) * cfg.d_samples(k) * vars.f[k] * vars.f[k];
  }
  CHECK(e.e_dl == doctest::Approx(edl).epsilon(1e-12));
  CHECK(e.e_ul == doctest::Approx(eul).epsilon(1e-12));
  CHECK(e.e_comp == doctest::Approx(ec).epsilon(1e-12));
  CHECK(e.total == doctest::Approx(edl + eul + ec).epsilon(1e-12));

  // K = 1 reduction: single session, single terms.
  auto cfg1 = NetworkConfig::reference();
  cfg1.K = 1;
  cfg1.tau_dp = cfg1.tau_up = 1;
  const auto s1 = drop(cfg1, 2);
  auto v1 = SbVariables::zeros(1);
  v1.schedule.A(0, 0) = 1;
  v1.schedule.B(0, 0) = 1;
  v1.eta = {0.8};
  v1.zeta = {0.7};
  v1.f = {2e6};
  v1.t_d = {0.1};
  v1.t_u = {0.2};
  const auto e1 = models::energy_sb(v1, s1, cfg1);
  CHECK(e1.e_dl == doctest::Approx(cfg1.rho_d * cfg1.noise_w * 0.8 * 0.1).epsilon(1e-12));
  CHECK(e1.e_ul == doctest::Approx(cfg1.rho_u * cfg1.noise_w * 0.7 * 0.2).epsilon(1e-12));

  // Invariant violations are rejected.
  auto bad = v1;
  bad.eta = {1.5};  // power sum above 1
  CHECK_THROWS_AS(models::energy_sb(bad, s1, cfg1), ValidationError);
}

TEST_CASE("single-session energy matches a reference sum") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 3;
  cfg.tau_dp = cfg.tau_up = 3;
  const auto s = drop(cfg, 31);

  SingleSessionVariables v;
  v.design = SingleDesign::kAsynchronous;
  v.eta = {0.2, 0.15, 0.3};
  v.zeta = {0.9, 0.5, 0.7};
  v.f = {2e6, 3e6, 1.5e6};

  const auto e = models::energy_single(v, s, cfg);
  const auto rd = models::rate_dl_single(s, cfg, v.eta);
  const auto ru = models::rate_ul_single(s, cfg, v.zeta);
  double edl = 0, eul = 0, ec = 0;
  for (int k = 0; k < 3; ++k) {
    edl += cfg.rho_d * cfg.noise_w * v.eta[k] * cfg.s_d_bits / rd[k];
    eul += cfg.rho_u * cfg.noise_w * v.zeta[k] * cfg.s_u_bits / ru[k];
    ec += models::compute_energy(v.f[k], cfg.L, cfg.d_samples(k), cfg.c_cycles(k), cfg.alpha);
  }
  CHECK(e.e_dl == doctest::Approx(edl).epsilon(1e-12));
  CHECK(e.e_ul == doctest::Approx(eul).epsilon(1e-12));
  CHECK(e.e_comp == doctest::Approx(ec).epsilon(1e-12));

  // Zero powers carry no data and cost nothing.
  SingleSessionVariables z;
  z.eta.assign(3, 0.0);
  z.zeta.assign(3, 0.0);
  z.f.assign(3, 0.0);
  CHECK(models::energy_single(z, s, cfg).total == 0.0);

  // K = 1 degenerate reduction.
  auto cfg1 = NetworkConfig::reference();
  cfg1.K = 1;
  cfg1.tau_dp = cfg1.tau_up = 1;
  const auto s1 = drop(cfg1, 2);
  SingleSessionVariables v1;
  v1.eta = {1.0};
  v1.zeta = {1.0};
  v1.f = {1e6};
  const auto e1 = models::energy_single(v1, s1, cfg1);
  const auto rd1 = models::rate_dl_single(s1, cfg1, v1.eta);
  CHECK(e1.e_dl == doctest::Approx(cfg1.rho_d * cfg1.noise_w * cfg1.s_d_bits / rd1[0]).epsilon(1e-12));
}

TEST_CASE("feasibility report flags the expected constraints") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 1;
  cfg.tau_dp = cfg.tau_up = 1;
  const auto s = drop(cfg, 2);

  // Hand-built feasible K=1 point: rates determine exact session lengths,
  // the frequency fills the remaining budget.
  auto v = SbVariables::zeros(1);
  v.schedule.A(0, 0) = 1;
  v.schedule.B(0, 0) = 1;
  v.eta = {1.0};
  v.zeta = {1.0};
  std::vector<double> eta = {1.0}, zeta = {1.0};
  const double rd = models::rate_dl_session_relaxed(s, cfg, eta, 1, 0);
  const double ru = models::rate_ul_session_relaxed(s, cfg, zeta, 1, 0);
  v.t_d = {cfg.s_d_bits / rd};
  v.t_u = {cfg.s_u_bits / ru};
  v.s_d = {cfg.s_d_bits};
  v.s_u = {cfg.s_u_bits};
  const double budget = cfg.t_qos_s - v.t_d[0] - v.t_u[0];
  REQUIRE(budget > 0);
  v.f = {cfg.cycles(0) / budget};
  v.aux.t = cfg.t_qos_s;

  const auto rep = models::validate_schedule_feasibility(v, s, cfg);
  CHECK(rep.schedule_residual < 1e-12);
  CHECK(rep.power_residual < 1e-12);
  CHECK(rep.data_residual < 1e-12);
  CHECK(rep.rate_time_residual < 1e-12);
  CHECK(rep.time_equality_residual < 1e-9);
  CHECK(rep.qos_residual == 0.0);
  CHECK(rep.sync_residual == 0.0);
  CHECK(rep.feasible(1e-6));

  // An impossible QoS target shows up as a positive residual.
  auto tight = cfg;
  tight.t_qos_s = 1e-9;
  const auto rep2 = models::validate_schedule_feasibility(v, s, tight);
  CHECK(rep2.qos_residual > 0);
}
