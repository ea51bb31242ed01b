#pragma once

// Deletion schemes: rank-indexed choice distributions over n queues.
//
// Queue ranks are 1-based throughout (rank 1 holds the smallest top
// element), matching the indices in the stationary formulas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mq/errors.hpp"
#include "mq/sampling.hpp"

namespace mq {

/// Number of queues compared per deletion, c > 1. A deletion compares
/// floor(c) + 1 queues with probability eps = c - floor(c), else floor(c).
class CParameter {
 public:
  explicit CParameter(double c) : c_(c) {
    if (!std::isfinite(c) || !(c > 1.0)) {
      throw ParameterError("c must be a finite real > 1 (got " +
                           std::to_string(c) + ")");
    }
    floor_c_ = static_cast<unsigned>(std::floor(c));
    eps_ = c - floor_c_;
  }

  double value() const noexcept { return c_; }
  unsigned floor_c() const noexcept { return floor_c_; }
  unsigned ceil_c() const noexcept { return eps_ > 0.0 ? floor_c_ + 1 : floor_c_; }
  double eps() const noexcept { return eps_; }

  /// Number of queues sampled for one deletion.
  unsigned draw_count(RandomSource& rng) const noexcept {
    return eps_ > 0.0 && rng.bernoulli(eps_) ? floor_c_ + 1 : floor_c_;
  }

 private:
  double c_;
  unsigned floor_c_ = 0;
  double eps_ = 0.0;
};

/// A distribution sigma over queue ranks 1..n, stored together with its
/// prefix sums and the slack n * sigma_upto(i) - i.
///
/// Prefix sums drive sampling; sigma is derived by differencing and kept
/// for display. The slack is computed in closed form where the scheme allows
/// it, so the convergence check is exact for best-of-c and uniform schemes.
class ChoiceDistribution {
 public:
  /// Normalises non-negative weights to a probability vector.
  static ChoiceDistribution from_weights(std::span<const double> weights) {
    if (weights.empty()) throw ParameterError("sigma: need at least one weight");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ParameterError("sigma: weights must be finite and non-negative");
      }
      total += w;
    }
    if (!(total > 0.0)) throw ParameterError("sigma: weights sum to zero");

    ChoiceDistribution d(weights.size());
    const std::size_t n = weights.size();
    long double running = 0.0L;
    for (std::size_t i = 1; i <= n; ++i) {
      running += static_cast<long double>(weights[i - 1]) / total;
      d.upto_[i] = static_cast<double>(running);
    }
    d.upto_[n] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
      d.upto_[i] = std::min(std::max(d.upto_[i], d.upto_[i - 1]), 1.0);
      d.slack_[i] = static_cast<double>(static_cast<long double>(n) * d.upto_[i] -
                                        static_cast<long double>(i));
    }
    d.finish();
    d.exact_slack_ = false;
    d.label_ = "weights";
    return d;
  }

  static ChoiceDistribution uniform(std::size_t n) {
    check_n(n);
    ChoiceDistribution d(n);
    for (std::size_t i = 1; i < n; ++i) {
      d.upto_[i] = static_cast<double>(i) / static_cast<double>(n);
      d.slack_[i] = 0.0;
    }
    d.upto_[n] = 1.0;
    d.finish();
    d.label_ = "uniform";
    return d;
  }

  /// Always delete from the queue with the smallest top element.
  static ChoiceDistribution first_only(std::size_t n) {
    check_n(n);
    ChoiceDistribution d(n);
    for (std::size_t i = 1; i <= n; ++i) {
      d.upto_[i] = 1.0;
      if (i < n) d.slack_[i] = static_cast<double>(n - i);
    }
    d.finish();
    d.label_ = "first";
    return d;
  }

  /// The best-of-c scheme:
  /// sigma_upto(i) = 1 - (1 - i/n)^floor(c) * (1 - eps * i/n).
  static ChoiceDistribution best_of_c(const CParameter& c, std::size_t n) {
    check_n(n);
    ChoiceDistribution d(n);
    const double k = c.floor_c();
    const double eps = c.eps();
    const double nn = static_cast<double>(n);
    for (std::size_t i = 1; i < n; ++i) {
      const double x = static_cast<double>(i) / nn;
      d.upto_[i] = 1.0 - std::pow(1.0 - x, k) * (1.0 - eps * x);
      // n*sigma_upto(i) - i = n(1-x) * (1 - (1-x)^(k-1) (1 - eps x)),
      // with the inner difference evaluated through expm1 to avoid cancellation
      const double log_y = (k - 1.0) * std::log1p(-x) + std::log1p(-eps * x);
      d.slack_[i] = nn * (1.0 - x) * -std::expm1(log_y);
    }
    d.upto_[n] = 1.0;
    d.finish();
    d.label_ = "best-of-" + format_c(c.value());
    return d;
  }

  std::size_t n() const noexcept { return sigma_.size(); }

  /// Probability of rank i, 1 <= i <= n.
  double sigma(std::size_t i) const { return sigma_.at(i - 1); }

  /// Pr[i* <= i], 0 <= i <= n.
  double sigma_upto(std::size_t i) const { return upto_.at(i); }

  /// n * sigma_upto(i) - i for 0 <= i <= n.
  double slack(std::size_t i) const { return slack_.at(i); }

  std::span<const double> sigma() const noexcept { return sigma_; }
  std::span<const double> prefix() const noexcept { return upto_; }

  const std::string& label() const noexcept { return label_; }

  /// First rank i in [1, n-1] with sigma_upto(i) <= i/n, if any.
  std::optional<std::size_t> first_star_violation() const noexcept {
    const double tolerance = exact_slack_ ? 0.0 : kWeightSlackTolerance;
    for (std::size_t i = 1; i < n(); ++i) {
      if (!(slack_[i] > tolerance)) return i;
    }
    return std::nullopt;
  }

  bool satisfies_star() const noexcept { return !first_star_violation(); }

  /// Rank i* drawn with probability sigma(i*); inverse CDF on the prefix sums.
  std::size_t sample(RandomSource& rng) const noexcept {
    if (n() == 1) return 1;
    const double u = rng.uniform01();
    const auto it = std::upper_bound(upto_.begin() + 1, upto_.end(), u);
    return static_cast<std::size_t>(it - upto_.begin());
  }

  /// Slack below which a weight-derived scheme counts as sitting on the
  /// boundary of the convergence condition.
  static constexpr double kWeightSlackTolerance = 1e-9;

 private:
  explicit ChoiceDistribution(std::size_t n)
      : sigma_(n, 0.0), upto_(n + 1, 0.0), slack_(n + 1, 0.0) {}

  static void check_n(std::size_t n) {
    if (n == 0) throw ParameterError("need at least one queue");
  }

  static std::string format_c(double c) {
    std::string s = std::to_string(c);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  void finish() {
    upto_[0] = 0.0;
    slack_[0] = 0.0;
    slack_[n()] = 0.0;
    for (std::size_t i = 1; i <= n(); ++i) sigma_[i - 1] = upto_[i] - upto_[i - 1];
  }

  std::vector<double> sigma_;
  std::vector<double> upto_;
  std::vector<double> slack_;
  bool exact_slack_ = true;
  std::string label_;
};

inline ChoiceDistribution best_of_c(const CParameter& c, std::size_t n) {
  return ChoiceDistribution::best_of_c(c, n);
}

inline bool satisfies_star(const ChoiceDistribution& sigma) {
  return sigma.satisfies_star();
}

inline std::size_t sample_index(const ChoiceDistribution& sigma,
                                RandomSource& rng) {
  return sigma.sample(rng);
}

/// Explicit best-of-c: draws floor(c) or floor(c)+1 queues uniformly with
/// replacement and returns the (1-based) position holding the smallest
/// minimum.
template <class Key>
std::size_t sample_index_explicit(const CParameter& c,
                                  std::span<const Key> minima,
                                  RandomSource& rng) {
  if (minima.empty()) throw ParameterError("sample_index_explicit: no queues");
  const unsigned draws = c.draw_count(rng);
  std::size_t best = rng.uniform_index(minima.size());
  for (unsigned k = 1; k < draws; ++k) {
    const std::size_t q = rng.uniform_index(minima.size());
    if (minima[q] < minima[best]) best = q;
  }
  return best + 1;
}

}  // namespace mq
