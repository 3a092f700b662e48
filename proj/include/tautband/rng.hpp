#pragma once

// Counter-based random number generation. Every draw is a pure function of
// (seed, counter), so replicate streams can be forked deterministically and
// consumed in any order. The mixer is SplitMix64; normals come from the
// inverse CDF (Abramowitz & Stegun 26.2.23 initial guess, polished by Halley
// iterations on erfc).

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace tautband {

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// k-th raw draw of the stream identified by `seed`.
inline std::uint64_t counter_u64(std::uint64_t seed, std::uint64_t k) {
  return detail::mix64(seed + (k + 1) * detail::kGolden);
}

// Derive an independent stream seed from (seed, domain, index). Used to give
// each replicate of a campaign its own stream.
inline std::uint64_t fork_seed(std::uint64_t seed, std::uint64_t domain,
                               std::uint64_t index) {
  const std::uint64_t s = detail::mix64(seed ^ detail::mix64(domain));
  return detail::mix64(s + (index + 1) * detail::kGolden);
}

// Map a raw draw into (0,1), open at both ends.
inline double to_unit_open(std::uint64_t x) {
  return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

// Quantile of the standard normal distribution. Initial guess from
// Abramowitz & Stegun 26.2.23 (|error| < 4.5e-4), then Halley steps on
// Phi(x) - p; accurate to a few ulps over (0,1).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0,1)");
  const bool upper = p >= 0.5;
  const double q = upper ? 1.0 - p : p;
  const double t = std::sqrt(-2.0 * std::log(q));
  double x = t - (2.30753 + 0.27061 * t) / (1.0 + t * (0.99229 + 0.04481 * t));
  if (!upper) x = -x;
  constexpr double kSqrt2 = 1.4142135623730951;
  constexpr double kSqrt2Pi = 2.5066282746310002;
  for (int it = 0; it < 4; ++it) {
    const double err = 0.5 * std::erfc(-x / kSqrt2) - p;
    const double d = err * kSqrt2Pi * std::exp(0.5 * x * x);
    const double step = d / (1.0 + 0.5 * x * d);
    x -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(x))) break;
  }
  return x;
}

// Stateful view over one counter stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return counter_u64(seed_, counter_++); }
  double next_u01() { return to_unit_open(next_u64()); }
  double next_normal() { return inverse_normal_cdf(next_u01()); }
  double next_exponential(double mean) { return -mean * std::log(next_u01()); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace tautband
