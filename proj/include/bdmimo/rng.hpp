/**
 * @file rng.hpp
 * @brief Deterministic per-stream random number generation.
 *
 * Every Monte Carlo trial owns an independent generator whose seed is a
 * splitmix64 hash of (master seed, stream index).  Trials can therefore run
 * on any number of workers, in any order, and still produce bit-identical
 * draws.  The complex Gaussian sampler uses an explicit Box-Muller transform
 * on 53-bit uniforms so the output depends only on the standardized
 * mt19937_64 sequence.
 */
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace bdmimo {

inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

/// Finalizing mix of splitmix64; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden64;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for an independent substream of a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream * kGolden64 + 1));
}

/// Circularly-symmetric complex Gaussian sampler, CN(0,1) per entry
/// (real and imaginary parts each N(0, 1/2)).
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in (0,1], 53-bit resolution; never 0 so log() is safe.
  double positive_uniform() {
    return static_cast<double>((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform in [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  std::complex<double> operator()() {
    const double u1 = positive_uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    // One Box-Muller pair gives both quadrature components; the 1/sqrt(2)
    // scaling yields unit total variance.
    return {r * std::cos(theta) * std::numbers::sqrt2 / 2.0,
            r * std::sin(theta) * std::numbers::sqrt2 / 2.0};
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace bdmimo
