#pragma once

// Seedable random source and the handful of samplers the simulators need.
//
// std::*_distribution is deliberately not used: its output is
// implementation-defined, and runs must reproduce bit-for-bit across
// standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "mq/errors.hpp"

namespace mq {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// xoshiro256** seeded through splitmix64.
///
/// Child streams are derived from (seed, label) only, never from the current
/// position, so a trial's stream does not depend on how much the parent has
/// been used. Satisfies UniformRandomBitGenerator.
class RandomSource {
 public:
  using result_type = std::uint64_t;

  explicit RandomSource(std::uint64_t seed = 0) noexcept : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = detail::splitmix64(x);
  }

  std::uint64_t seed() const noexcept { return seed_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  /// Advances the stream by 2^128 draws.
  void jump() noexcept {
    constexpr std::array<std::uint64_t, 4> kJump = {
        0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL,
        0x39abdc4529b1661cULL};
    std::array<std::uint64_t, 4> acc{};
    for (std::uint64_t word : kJump) {
      for (int b = 0; b < 64; ++b) {
        if (word & (std::uint64_t{1} << b)) {
          for (int k = 0; k < 4; ++k) acc[k] ^= state_[k];
        }
        next();
      }
    }
    state_ = acc;
  }

  RandomSource split(std::uint64_t label) const noexcept {
    std::uint64_t x = label ^ 0x6a09e667f3bcc909ULL;
    std::uint64_t mixed = seed_ ^ detail::splitmix64(x);
    return RandomSource(detail::splitmix64(mixed));
  }

  RandomSource split(std::string_view label) const noexcept {
    return split(detail::fnv1a(label));
  }

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform01() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound). Lemire's multiply-and-reject.
  std::uint64_t uniform_index(std::uint64_t bound) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool bernoulli(double p) noexcept { return uniform01() < p; }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
};

enum class GeomConvention {
  failures_before_success,   // Geom(p), support {0, 1, ...}
  trials_including_success,  // Geom1(p), support {1, 2, ...}
};

inline double exp_sample(double rate, RandomSource& rng) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ParameterError("exp_sample: rate must be positive and finite");
  }
  return -std::log(rng.uniform01()) / rate;
}

/// Geometric sample by inverse CDF. Two calls on identically seeded sources
/// with the two conventions differ by exactly one.
inline std::uint64_t geom_sample(double p, GeomConvention convention,
                                 RandomSource& rng) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ParameterError("geom_sample: p must lie in (0, 1]");
  }
  std::uint64_t failures = 0;
  if (p == 1.0) {
    failures = 0;
  } else if (p > 0.999) {
    // log1p(-p) loses digits this close to 1; count trials explicitly
    while (!rng.bernoulli(p)) ++failures;
  } else {
    const double x = std::floor(std::log(rng.uniform01()) / std::log1p(-p));
    failures = x >= 0x1.0p63 ? (std::uint64_t{1} << 63)
                             : static_cast<std::uint64_t>(x);
  }
  return convention == GeomConvention::trials_including_success ? failures + 1
                                                                : failures;
}

/// Index in [0, weights.size()) drawn with probability weights[i].
inline std::size_t categorical_sample(std::span<const double> weights,
                                      RandomSource& rng) {
  if (weights.empty()) {
    throw ParameterError("categorical_sample: empty weight vector");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParameterError("categorical_sample: weights must be non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError("categorical_sample: weights must sum to 1");
  }
  const double u = rng.uniform01();
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] == 0.0) continue;
    last_positive = i;
    cumulative += weights[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

/// Parses a seed given in decimal or as 0x-prefixed hex.
inline std::uint64_t parse_seed(std::string_view text) {
  if (text.empty()) throw ParameterError("empty seed");
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  std::uint64_t value = 0;
  for (char ch : text) {
    int digit = -1;
    if (ch >= '0' && ch <= '9') digit = ch - '0';
    else if (base == 16 && ch >= 'a' && ch <= 'f') digit = ch - 'a' + 10;
    else if (base == 16 && ch >= 'A' && ch <= 'F') digit = ch - 'A' + 10;
    if (digit < 0) throw ParameterError("invalid seed: " + std::string(text));
    const unsigned __int128 next =
        static_cast<unsigned __int128>(value) * base + digit;
    if (next > std::numeric_limits<std::uint64_t>::max()) {
      throw ParameterError("seed does not fit in 64 bits");
    }
    value = static_cast<std::uint64_t>(next);
  }
  return value;
}

}  // namespace mq
