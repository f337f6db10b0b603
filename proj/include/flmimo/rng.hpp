/**
 * @file rng.hpp
 * @brief Seedable, portable random source for network drops.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the C++
 * standard. The uniform and normal conversions below are written out
 * explicitly (rather than via std::uniform_real_distribution /
 * std::normal_distribution, which are implementation-defined) so identical
 * seeds give bit-identical drops on any standard library.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace flmimo {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1): top 53 bits of one engine draw.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; one spare value is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0;
};

}  // namespace flmimo
