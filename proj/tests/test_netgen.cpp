#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "flmimo/config_io.hpp"
#include "flmimo/netgen.hpp"

using namespace flmimo;

TEST_CASE("placement is deterministic per seed") {
  auto cfg = NetworkConfig::reference();
  const auto p1 = netgen::place_ues(cfg, 42);
  const auto p2 = netgen::place_ues(cfg, 42);
  CHECK(p1.distances_km == p2.distances_km);
  CHECK(p1.shadowing_db == p2.shadowing_db);
  const auto p3 = netgen::place_ues(cfg, 43);
  CHECK(p1.distances_km != p3.distances_km);
}

TEST_CASE("distances are clipped to the 35 m floor") {
  auto cfg = NetworkConfig::reference();
  cfg.side_km = 0.01;  // whole square inside the clipping disc
  const auto p = netgen::place_ues(cfg, 1);
  for (double d : p.distances_km) CHECK(d == netgen::kMinDistanceKm);

  cfg = NetworkConfig::reference();
  for (int seed = 0; seed < 50; ++seed) {
    for (double d : netgen::place_ues(cfg, seed).distances_km) {
      CHECK(d >= netgen::kMinDistanceKm);
    }
  }
}

TEST_CASE("shadowing matches the configured 7 dB standard deviation") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 1000;
  double sum = 0, sumsq = 0;
  const int drops = 100;  // 10^5 samples in total
  for (int s = 0; s < drops; ++s) {
    const auto p = netgen::place_ues(cfg, 1000 + s);
    for (double z : p.shadowing_db) {
      sum += z;
      sumsq += z * z;
    }
  }
  const double n = static_cast<double>(drops) * cfg.K;
  const double mean = sum / n;
  const double stddev = std::sqrt(sumsq / n - mean * mean);
  CHECK(std::abs(stddev - 7.0) / 7.0 < 0.02);
  CHECK(std::abs(mean) < 0.1);
}

TEST_CASE("large-scale coefficient closed form") {
  // d = 1 km, no shadowing.
  CHECK(netgen::large_scale_coeff(1.0, 0.0) ==
        doctest::Approx(std::pow(10.0, -14.81)).epsilon(1e-12));
  // +10 dB shadowing scales beta by 10.
  const double base = netgen::large_scale_coeff(0.2, 0.0);
  CHECK(netgen::large_scale_coeff(0.2, 10.0) == doctest::Approx(10.0 * base).epsilon(1e-12));
  // d = 0.1 km evaluated independently.
  const double expected = std::pow(10.0, (-148.1 - 37.6 * std::log10(0.1)) / 10.0);
  CHECK(std::abs(std::log10(expected) - (-11.05)) < 1e-12);
  CHECK(netgen::large_scale_coeff(0.1, 0.0) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(netgen::large_scale_coeff(0.01, 0.0), std::domain_error);
}

TEST_CASE("beta decreases with distance at fixed shadowing") {
  double prev = netgen::large_scale_coeff(0.035, 3.0);
  for (double d = 0.04; d < 0.3; d += 0.01) {
    const double b = netgen::large_scale_coeff(d, 3.0);
    CHECK(b < prev);
    prev = b;
  }
}

TEST_CASE("mmse variance closed form and limits") {
  const double beta = 4.2e-12;
  // Large pilot power: estimate variance approaches beta.
  CHECK(netgen::mmse_variance(10, 1e20, beta) == doctest::Approx(beta).epsilon(1e-6));
  // tau*rho*beta = 1 gives exactly beta/2.
  CHECK(netgen::mmse_variance(1.0, 1.0 / beta, beta) == doctest::Approx(beta / 2).epsilon(1e-12));
  // Reference point evaluated independently: tau=10, rho = 0.2 W over -92 dBm
  // noise, beta at 0.1 km.
  const double noise = std::pow(10.0, -12.2);
  const double rho = 0.2 / noise;
  const double b01 = netgen::large_scale_coeff(0.1, 0.0);
  const double expected = 10 * rho * b01 * b01 / (10 * rho * b01 + 1.0);
  CHECK(netgen::mmse_variance(10, rho, b01) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(netgen::mmse_variance(0, rho, b01), std::domain_error);
  CHECK_THROWS_AS(netgen::mmse_variance(10, -1, b01), std::domain_error);

  // Monotone in pilot power and pilot length.
  CHECK(netgen::mmse_variance(10, 2 * rho, b01) > netgen::mmse_variance(10, rho, b01));
  CHECK(netgen::mmse_variance(20, rho, b01) > netgen::mmse_variance(10, rho, b01));
}

TEST_CASE("channel state composes the scalar operations") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 1;
  cfg.tau_dp = 12;
  cfg.tau_up = 9;  // K=1 keeps this valid
  UEPlacement p;
  p.distances_km = {0.12};
  p.shadowing_db = {-3.0};
  const auto s = netgen::build_channel_state(cfg, p);
  const double beta = netgen::large_scale_coeff(0.12, -3.0);
  CHECK(s.beta[0] == beta);
  CHECK(s.sigma2_dl_hat[0] == netgen::mmse_variance(cfg.tau_dp, cfg.rho_p, beta));
  CHECK(s.sigma2_ul_bar[0] == netgen::mmse_variance(cfg.tau_up, cfg.rho_p, beta));
}

TEST_CASE("identical UEs produce identical channel rows") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 4;
  UEPlacement p;
  p.distances_km.assign(4, 0.09);
  p.shadowing_db.assign(4, 1.5);
  const auto s = netgen::build_channel_state(cfg, p);
  for (int k = 1; k < 4; ++k) {
    CHECK(s.beta[k] == s.beta[0]);
    CHECK(s.sigma2_dl_hat[k] == s.sigma2_dl_hat[0]);
    CHECK(s.sigma2_ul_bar[k] == s.sigma2_ul_bar[0]);
  }
}

TEST_CASE("estimate variance stays strictly below beta on random drops") {
  auto cfg = NetworkConfig::reference();
  const auto p = netgen::place_ues(cfg, 7);
  const auto s = netgen::build_channel_state(cfg, p);
  for (int k = 0; k < cfg.K; ++k) {
    CHECK(s.sigma2_dl_hat[k] > 0);
    CHECK(s.sigma2_dl_hat[k] < s.beta[k]);
    CHECK(s.sigma2_ul_bar[k] > 0);
    CHECK(s.sigma2_ul_bar[k] < s.beta[k]);
  }
  // Bit-identical reconstruction from the same seed.
  const auto s2 = netgen::build_channel_state(cfg, netgen::place_ues(cfg, 7));
  CHECK(s.beta == s2.beta);
  CHECK(s.sigma2_dl_hat == s2.sigma2_dl_hat);
  CHECK(s.sigma2_ul_bar == s2.sigma2_ul_bar);
}

TEST_CASE("config round-trips through the key/value format") {
  auto cfg = NetworkConfig::reference();
  cfg.M = 50;
  cfg.t_qos_s = 2.5;
  cfg.d_k_samples = {1e4, 2e4, 3e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e4, 1e4};
  std::stringstream ss;
  write_config(ss, cfg);
  const auto back = load_config(ss);
  CHECK(back.M == 50);
  CHECK(back.t_qos_s == doctest::Approx(2.5));
  CHECK(back.d_k_samples.size() == 10);
  CHECK(back.d_k_samples[2] == doctest::Approx(3e4));
}

TEST_CASE("config validation rejects bad scenarios") {
  std::stringstream bad1("M = 5\nK = 10\n");
  CHECK_THROWS_AS(load_config(bad1), std::invalid_argument);
  std::stringstream bad2("tau_dp = 5\n");  // below K
  CHECK_THROWS_AS(load_config(bad2), std::invalid_argument);
  std::stringstream bad3("unknown_key = 1\n");
  CHECK_THROWS_AS(load_config(bad3), std::invalid_argument);
  std::stringstream ok("M = 100\nK = 10\n# comment\n\n");
  CHECK_NOTHROW(load_config(ok));
}

TEST_CASE("placement csv dump has the documented schema") {
  auto cfg = NetworkConfig::reference();
  cfg.K = 2;
  cfg.tau_dp = 2;
  cfg.tau_up = 2;
  const auto p = netgen::place_ues(cfg, 5);
  std::stringstream ss;
  netgen::write_placement_csv(ss, cfg, p);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "ue,d_km,z_db,beta,sigma2_dl,sigma2_ul");
  int rows = 0;
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 2);
}
