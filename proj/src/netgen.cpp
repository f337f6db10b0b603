#include "flmimo/netgen.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "flmimo/rng.hpp"

namespace flmimo::netgen {

UEPlacement place_ues(const NetworkConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  UEPlacement p;
  p.seed = seed;
  p.distances_km.resize(config.K);
  p.shadowing_db.resize(config.K);
  const double half = config.side_km / 2.0;
  for (int k = 0; k < config.K; ++k) {
    const double x = rng.uniform(-half, half);
    const double y = rng.uniform(-half, half);
    p.distances_km[k] = std::max(std::hypot(x, y), kMinDistanceKm);
    p.shadowing_db[k] = rng.normal(0.0, kShadowStdDb);
  }
  return p;
}

double large_scale_coeff(double d_km, double z_db) {
  if (d_km < kMinDistanceKm) {
    throw std::domain_error("large_scale_coeff: distance below 35 m floor");
  }
  const double beta_db = -148.1 - 37.6 * std::log10(d_km) + z_db;
  return std::pow(10.0, beta_db / 10.0);
}

double mmse_variance(double tau_p, double rho_p, double beta) {
  if (!(tau_p > 0) || !(rho_p > 0) || !(beta > 0)) {
    throw std::domain_error("mmse_variance: inputs must be positive");
  }
  const double x = tau_p * rho_p * beta;
  return x * beta / (x + 1.0);
}

ChannelState build_channel_state(const NetworkConfig& config,
                                 const UEPlacement& placement) {
  ChannelState s;
  const int K = config.K;
  s.beta.resize(K);
  s.sigma2_dl_hat.resize(K);
  s.sigma2_ul_bar.resize(K);
  for (int k = 0; k < K; ++k) {
    const double beta = large_scale_coeff(placement.distances_km[k], placement.shadowing_db[k]);
    s.beta[k] = beta;
    s.sigma2_dl_hat[k] = mmse_variance(config.tau_dp, config.rho_p, beta);
    s.sigma2_ul_bar[k] = mmse_variance(config.tau_up, config.rho_p, beta);
  }
  return s;
}

void write_placement_csv(std::ostream& os, const NetworkConfig& config,
                         const UEPlacement& placement) {
  const ChannelState s = build_channel_state(config, placement);
  os << "ue,d_km,z_db,beta,sigma2_dl,sigma2_ul\n";
  char buf[256];
  for (int k = 0; k < config.K; ++k) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g\n", k,
                  placement.distances_km[k], placement.shadowing_db[k], s.beta[k],
                  s.sigma2_dl_hat[k], s.sigma2_ul_bar[k]);
    os << buf;
  }
}

}  // namespace flmimo::netgen
