// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#include "censpatial/errors.hpp"

// Reproducible random-variate generation. The generator is xoshiro256++
// (Blackman & Vigna, 2019), seeded through splitmix64; all transforms to
// continuous distributions are implemented here so that a given seed yields
// the same draw sequence on every platform that provides IEEE-754 doubles.
// Normal variates use the inverse CDF (Wichura's AS241, rational
// approximation accurate to ~1e-15) rather than a rejection scheme, so each
// normal consumes exactly one uniform.

namespace censpatial {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Standard normal CDF via erfc; double precision across the full range.
inline double standard_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / 1.4142135623730951);
}

// Standard normal quantile, AS241 PPND16 (Wichura 1988).
// Requires p in (0, 1).
inline double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw domain_error("standard_normal_quantile: p must lie in (0,1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) *
                     r +
                 1.27045825245236838258e0) *
                    r +
                3.64784832476320460504e0) *
                   r +
               5.76949722146069140550e0) *
                  r +
              4.63033784615654529590e0) *
                 r +
             1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) *
                     r +
                 1.48103976427480074590e-1) *
                    r +
                6.89767334985100004550e-1) *
                   r +
               1.67638483018380384940e0) *
                  r +
              2.05319162663775882187e0) *
                 r +
             1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) *
                     r +
                 2.65321895265761230930e-2) *
                    r +
                2.96560571828504891230e-1) *
                   r +
               1.78482653991729133580e0) *
                  r +
              5.46378491116411436990e0) *
                 r +
             6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-6) *
                     r +
                 7.86869131145613259100e-4) *
                    r +
                1.48753612908506148525e-2) *
                   r +
               1.36929880922735805310e-1) *
                  r +
              5.99832206555887937690e-1) *
                 r +
             1.0);
  }
  return (q < 0.0) ? -value : value;
}

// Seedable stream of random variates. Copyable; a copy replays the same
// future sequence. One stream per chain/task; never share one concurrently.
class rng_stream {
 public:
  explicit rng_stream(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1); safe to feed to log/quantile.
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  double normal() { return standard_normal_quantile(uniform_open()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential() noexcept { return -std::log(uniform_open()); }

  // Gamma(shape, 1) by Marsaglia & Tsang (2000); shape < 1 via the boost
  // Gamma(shape+1) * U^(1/shape).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw domain_error("gamma: shape must be positive");
    if (shape < 1.0) {
      const double u = uniform_open();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }

  // Deterministically derived child stream; children with distinct keys are
  // independent for practical purposes. Used to hand one stream per
  // replicate/fold/task.
  rng_stream split(std::uint64_t key) const {
    std::uint64_t sm = seed_ ^ (0xA0761D6478BD642FULL * (key + 1));
    return rng_stream(detail::splitmix64(sm));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
};

}  // namespace censpatial
