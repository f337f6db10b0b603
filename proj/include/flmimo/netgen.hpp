/**
 * @file netgen.hpp
 * @brief Reproducible network drops and channel statistics.
 */
#pragma once

#include <cstdint>
#include <iosfwd>

#include "flmimo/types.hpp"

namespace flmimo::netgen {

// Minimum BS-UE distance (km); samples closer than this are clipped.
inline constexpr double kMinDistanceKm = 0.035;

// Shadow fading standard deviation (dB).
inline constexpr double kShadowStdDb = 7.0;

/**
 * Drops config.K UEs uniformly in the side_km x side_km square centered on
 * the BS. Distances are clipped to kMinDistanceKm; shadowing is zero-mean
 * log-normal with kShadowStdDb. Deterministic for a fixed seed.
 */
UEPlacement place_ues(const NetworkConfig& config, std::uint64_t seed);

/**
 * Large-scale fading coefficient (linear scale):
 *   beta_dB = -148.1 - 37.6 log10(d_km) + z_dB.
 * Throws std::domain_error for d_km below the clipping floor.
 */
double large_scale_coeff(double d_km, double z_db);

/**
 * MMSE channel-estimate variance tau*rho*beta^2 / (tau*rho*beta + 1).
 * Used with tau_dp for the downlink-phase estimates and tau_up for the
 * uplink-phase estimates. Throws std::domain_error on nonpositive inputs.
 */
double mmse_variance(double tau_p, double rho_p, double beta);

// Applies large_scale_coeff then mmse_variance per UE for both pilot lengths.
ChannelState build_channel_state(const NetworkConfig& config,
                                 const UEPlacement& placement);

// CSV dump with header ue,d_km,z_db,beta,sigma2_dl,sigma2_ul.
void write_placement_csv(std::ostream& os, const NetworkConfig& config,
                         const UEPlacement& placement);

}  // namespace flmimo::netgen
