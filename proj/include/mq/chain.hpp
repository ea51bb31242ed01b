#pragma once

// The deletion-only MultiQueue as a Markov chain on gap vectors.
//
// State: d_1..d_{n-1}, the number of non-top elements ("dots") between the
// top elements ("balls") of consecutive queues. The dots right of ball n are
// infinitely many; that case is a dedicated branch, not a stored sentinel.
//
// One deletion activates ball i* ~ sigma. While the active ball i has dots to
// its right, it consumes the next one with probability 1/i (the transition
// ends) or skips it with probability (i-1)/i, which moves the dot to the gap
// on its left. With no dot to its right it overtakes ball i+1.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "mq/analytics.hpp"
#include "mq/choice.hpp"
#include "mq/errors.hpp"
#include "mq/sampling.hpp"

namespace mq {

using Histogram = std::vector<std::uint64_t>;

inline void histogram_add(Histogram& h, std::uint64_t value) {
  if (value >= h.size()) h.resize(value + 1, 0);
  ++h[value];
}

struct GapVector {
  std::vector<std::uint64_t> d;  // d[i-1] = d_i

  static GapVector zeros(std::size_t n) {
    if (n == 0) throw ParameterError("n must be >= 1");
    return GapVector{std::vector<std::uint64_t>(n - 1, 0)};
  }

  std::size_t n() const noexcept { return d.size() + 1; }

  /// Rank of ball i (1-based): 1 + sum_{j<i} (d_j + 1).
  std::uint64_t rank(std::size_t i) const {
    std::uint64_t r = 1;
    for (std::size_t j = 1; j < i; ++j) r += d[j - 1] + 1;
    return r;
  }

  std::vector<std::uint64_t> ranks() const {
    std::vector<std::uint64_t> r(n(), 1);
    for (std::size_t i = 1; i < n(); ++i) r[i] = r[i - 1] + d[i - 1] + 1;
    return r;
  }

  std::uint64_t total() const noexcept {
    return std::accumulate(d.begin(), d.end(), std::uint64_t{0});
  }

  friend bool operator==(const GapVector&, const GapVector&) = default;
  friend auto operator<=>(const GapVector&, const GapVector&) = default;
};

struct TransitionalState {
  GapVector gaps;
  std::size_t ball = 0;

  friend bool operator==(const TransitionalState&, const TransitionalState&) = default;
  friend auto operator<=>(const TransitionalState&, const TransitionalState&) = default;
};

struct TransitionTrace {
  std::size_t activated_ball = 0;
  std::vector<TransitionalState> visited;
  std::size_t end_ball = 0;
  std::uint64_t dots_consumed_at_infinity = 0;
};

struct StepResult {
  std::uint64_t rank_error = 0;  // r_{i*} - 1 in the pre-step state
  std::size_t activated_ball = 0;
  std::size_t end_ball = 0;
  std::uint64_t dots_at_infinity = 0;  // skips performed as ball n
};

namespace detail {

inline void check_same_n(const GapVector& state, const ChoiceDistribution& sigma) {
  if (state.n() != sigma.n()) {
    throw ParameterError("gap vector and choice distribution disagree on n");
  }
}

inline void check_conservation([[maybe_unused]] std::uint64_t before,
                               [[maybe_unused]] const GapVector& after,
                               [[maybe_unused]] const StepResult& r) {
  assert(r.end_ball < after.n() ? after.total() + 1 == before
                                : after.total() == before + r.dots_at_infinity);
}

}  // namespace detail

/// Executes one deletion dot by dot. Mutates `state`; records every
/// transitional state into `trace` when given.
inline StepResult step(GapVector& state, const ChoiceDistribution& sigma,
                       RandomSource& rng, TransitionTrace* trace = nullptr) {
  detail::check_same_n(state, sigma);
  const std::size_t n = state.n();
  [[maybe_unused]] const std::uint64_t before = state.total();
  StepResult r;
  r.activated_ball = sigma.sample(rng);
  r.rank_error = state.rank(r.activated_ball) - 1;
  if (trace) {
    *trace = TransitionTrace{};
    trace->activated_ball = r.activated_ball;
  }

  std::size_t active = r.activated_ball;
  for (;;) {
    if (trace) trace->visited.push_back({state, active});
    if (active == n) {
      const double stop = 1.0 / static_cast<double>(n);
      while (!rng.bernoulli(stop)) {
        ++state.d[n - 2];
        ++r.dots_at_infinity;
        if (trace) trace->visited.push_back({state, active});
      }
      break;
    }
    std::uint64_t& right = state.d[active - 1];
    if (right == 0) {
      ++active;
      continue;
    }
    --right;
    if (rng.bernoulli(1.0 / static_cast<double>(active))) break;
    ++state.d[active - 2];  // active >= 2: ball 1 always stops
  }
  r.end_ball = active;
  if (trace) {
    trace->end_ball = active;
    trace->dots_consumed_at_infinity = r.dots_at_infinity;
  }
  detail::check_conservation(before, state, r);
  return r;
}

/// Same law as step(), but resolves the run of skips at each ball with one
/// Geom1(1/i) draw k: k <= d_i ends after k-1 skips, otherwise every dot is
/// skipped and the ball overtakes.
inline StepResult step_fast(GapVector& state, const ChoiceDistribution& sigma,
                            RandomSource& rng) {
  detail::check_same_n(state, sigma);
  const std::size_t n = state.n();
  [[maybe_unused]] const std::uint64_t before = state.total();
  StepResult r;
  r.activated_ball = sigma.sample(rng);
  r.rank_error = state.rank(r.activated_ball) - 1;

  std::size_t active = r.activated_ball;
  for (;;) {
    if (active == n) {
      const std::uint64_t k = geom_sample(1.0 / static_cast<double>(n),
                                          GeomConvention::trials_including_success, rng);
      if (n >= 2) state.d[n - 2] += k - 1;
      r.dots_at_infinity = k - 1;
      break;
    }
    std::uint64_t& right = state.d[active - 1];
    if (right == 0) {
      ++active;
      continue;
    }
    const std::uint64_t k = geom_sample(1.0 / static_cast<double>(active),
                                        GeomConvention::trials_including_success, rng);
    if (k <= right) {
      right -= k;
      if (active >= 2) state.d[active - 2] += k - 1;
      break;
    }
    if (active >= 2) state.d[active - 2] += right;
    right = 0;
    ++active;
  }
  r.end_ball = active;
  detail::check_conservation(before, state, r);
  return r;
}

/// Draws d_i ~ Geom(p_i) independently.
inline GapVector stationary_sampler(const ChoiceDistribution& sigma,
                                    RandomSource& rng) {
  const auto params = stationary_params(sigma);
  GapVector g = GapVector::zeros(sigma.n());
  for (std::size_t i = 0; i + 1 < sigma.n(); ++i) {
    g.d[i] = geom_sample(params.p[i], GeomConvention::failures_before_success, rng);
  }
  return g;
}

/// Probability of `gaps` under the product-of-geometrics law.
inline double stationary_pmf(const StationaryParams& params, const GapVector& gaps) {
  double log_p = 0.0;
  for (std::size_t i = 0; i < gaps.d.size(); ++i) {
    log_p += static_cast<double>(gaps.d[i]) * std::log1p(-params.p[i]) +
             std::log(params.p[i]);
  }
  return std::exp(log_p);
}

enum class InitKind { zeros, stationary };

struct RunOptions {
  std::uint64_t steps = 0;   // measured steps after burn-in
  std::uint64_t burnin = 0;  // discarded steps
  bool fast = false;         // step_fast instead of step
  std::uint64_t thin = 1;    // gap histograms sample every thin-th measured state
  std::vector<std::uint64_t> checkpoints;  // total step counts (burn-in included)
  bool record_transitional = false;
  std::uint64_t transitional_max_total = 8;  // only states with sum(d) <= this
};

/// max(10^4, 50 n ln n).
inline std::uint64_t default_burnin(std::size_t n) {
  const double x = static_cast<double>(n);
  const double v = n > 1 ? 50.0 * x * std::log(x) : 0.0;
  return std::max<std::uint64_t>(10000, static_cast<std::uint64_t>(std::ceil(v)));
}

struct RankCheckpoint {
  std::uint64_t step = 0;
  std::vector<std::uint64_t> ranks;
};

struct RunReport {
  GapVector initial;
  GapVector final_state;
  std::uint64_t steps = 0;
  std::uint64_t burnin = 0;
  std::vector<Histogram> gap_histograms;  // one per coordinate
  Histogram rank_error_histogram;
  std::uint64_t measured = 0;
  double mean_rank_error = 0.0;
  std::uint64_t max_rank_error = 0;
  std::vector<RankCheckpoint> checkpoints;
  std::map<TransitionalState, std::uint64_t> transitional_counts;
};

struct NoObserver {
  void operator()(std::uint64_t, const GapVector&, const StepResult&) const noexcept {}
};

/// Runs burnin + steps deletions from `initial`. The observer sees every
/// measured step as (step index, post-step state, step result).
template <class Observer = NoObserver>
RunReport run(GapVector initial, const ChoiceDistribution& sigma,
              const RunOptions& options, RandomSource& rng,
              Observer&& observer = {}) {
  detail::check_same_n(initial, sigma);
  if (options.thin == 0) throw ParameterError("thin must be >= 1");
  RunReport report;
  report.initial = initial;
  report.steps = options.steps;
  report.burnin = options.burnin;
  report.gap_histograms.resize(initial.d.size());

  std::vector<std::uint64_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  auto next_checkpoint = checkpoints.begin();
  auto take_checkpoints = [&](std::uint64_t s, const GapVector& g) {
    while (next_checkpoint != checkpoints.end() && *next_checkpoint == s) {
      report.checkpoints.push_back({s, g.ranks()});
      ++next_checkpoint;
    }
  };

  GapVector state = std::move(initial);
  TransitionTrace trace;
  long double rank_error_sum = 0.0L;
  const std::uint64_t total = options.burnin + options.steps;
  take_checkpoints(0, state);
  for (std::uint64_t s = 1; s <= total; ++s) {
    const bool measured = s > options.burnin;
    const bool tracing = options.record_transitional && measured;
    const StepResult r = options.fast && !tracing
                             ? step_fast(state, sigma, rng)
                             : step(state, sigma, rng, tracing ? &trace : nullptr);
    if (measured) {
      ++report.measured;
      rank_error_sum += r.rank_error;
      report.max_rank_error = std::max(report.max_rank_error, r.rank_error);
      histogram_add(report.rank_error_histogram, r.rank_error);
      if ((s - options.burnin) % options.thin == 0) {
        for (std::size_t i = 0; i < state.d.size(); ++i) {
          histogram_add(report.gap_histograms[i], state.d[i]);
        }
      }
      if (tracing) {
        for (const auto& ts : trace.visited) {
          if (ts.gaps.total() <= options.transitional_max_total) {
            ++report.transitional_counts[ts];
          }
        }
      }
      observer(s, state, r);
    }
    take_checkpoints(s, state);
  }
  report.mean_rank_error =
      report.measured ? static_cast<double>(rank_error_sum / report.measured) : 0.0;
  report.final_state = std::move(state);
  return report;
}

inline GapVector initial_state(InitKind init, const ChoiceDistribution& sigma,
                               RandomSource& rng) {
  return init == InitKind::stationary ? stationary_sampler(sigma, rng)
                                      : GapVector::zeros(sigma.n());
}

/// Long-run per-step occurrence rate of each small transitional state,
/// measured from a stationary start.
inline std::map<TransitionalState, double> transitional_frequencies(
    const ChoiceDistribution& sigma, std::uint64_t steps, RandomSource& rng,
    std::uint64_t max_total = 8) {
  if (sigma.n() > 3) throw ParameterError("transitional frequencies need n <= 3");
  RunOptions options;
  options.steps = steps;
  options.burnin = 1000;
  options.record_transitional = true;
  options.transitional_max_total = max_total;
  const auto report = run(stationary_sampler(sigma, rng), sigma, options, rng);
  std::map<TransitionalState, double> rates;
  for (const auto& [state, count] : report.transitional_counts) {
    rates[state] = static_cast<double>(count) / static_cast<double>(steps);
  }
  return rates;
}

// ---------------------------------------------------------------------------
// Exact stationary law on a truncated state space, for tiny n.

namespace detail {

class TruncatedSpace {
 public:
  TruncatedSpace(std::size_t n, std::uint64_t cap) : dims_(n - 1), cap_(cap) {
    size_ = 1;
    for (std::size_t i = 0; i < dims_; ++i) size_ *= cap + 1;
  }
  std::size_t size() const noexcept { return size_; }
  std::size_t index(const std::vector<std::uint64_t>& d) const noexcept {
    std::size_t idx = 0;
    for (std::size_t i = dims_; i-- > 0;) idx = idx * (cap_ + 1) + d[i];
    return idx;
  }
  std::vector<std::uint64_t> state(std::size_t idx) const {
    std::vector<std::uint64_t> d(dims_);
    for (std::size_t i = 0; i < dims_; ++i) {
      d[i] = idx % (cap_ + 1);
      idx /= cap_ + 1;
    }
    return d;
  }

 private:
  std::size_t dims_;
  std::uint64_t cap_;
  std::size_t size_;
};

// Depth-first walk of the transitional states reachable from (d, ball),
// accumulating end-state probabilities. Increments past `cap` are clamped.
inline void enumerate_from(std::vector<std::uint64_t> d, std::size_t ball,
                           double mass, std::uint64_t cap,
                           std::map<std::vector<std::uint64_t>, double>& out) {
  const std::size_t n = d.size() + 1;
  for (;;) {
    if (ball == n) {
      if (n == 1) {
        out[d] += mass;
        return;
      }
      const double stop = 1.0 / static_cast<double>(n);
      std::uint64_t& last = d[n - 2];
      double remaining = mass;
      while (last < cap) {
        out[d] += remaining * stop;
        remaining *= 1.0 - stop;
        ++last;
      }
      out[d] += remaining;  // clamped: every further skip stays at the cap
      return;
    }
    if (d[ball - 1] == 0) {
      ++ball;
      continue;
    }
    const double stop = 1.0 / static_cast<double>(ball);
    auto end = d;
    --end[ball - 1];
    out[end] += mass * stop;
    if (ball == 1) return;
    mass *= 1.0 - stop;
    --d[ball - 1];
    if (d[ball - 2] < cap) ++d[ball - 2];
  }
}

}  // namespace detail

/// Exact one-step law from `from` (entries clamped at `cap`).
inline std::map<std::vector<std::uint64_t>, double> enumerate_transitions(
    const GapVector& from, const ChoiceDistribution& sigma, std::uint64_t cap) {
  detail::check_same_n(from, sigma);
  std::map<std::vector<std::uint64_t>, double> out;
  for (std::size_t i = 1; i <= sigma.n(); ++i) {
    if (sigma.sigma(i) <= 0.0) continue;
    detail::enumerate_from(from.d, i, sigma.sigma(i), cap, out);
  }
  return out;
}

struct BruteForceResult {
  std::map<std::vector<std::uint64_t>, double> pmf;
  bool converged = false;      // fixed point reached and no mass piled on the cap
  bool iteration_converged = false;
  double boundary_mass = 0.0;  // mass on states with some entry == cap
  std::size_t iterations = 0;
  double last_change = 0.0;    // L1 change of the final iteration
};

/// Stationary law of the chain truncated to entries <= cap, by power
/// iteration of the exact transition matrix until the L1 change drops below
/// 1e-12. Requires n <= 3 and cap <= 64.
inline BruteForceResult brute_force_stationary(const ChoiceDistribution& sigma,
                                               std::uint64_t cap,
                                               std::size_t max_iterations = 200000) {
  const std::size_t n = sigma.n();
  if (n > 3 || cap == 0 || cap > 64) {
    throw ParameterError("brute-force oracle needs n <= 3 and 1 <= cap <= 64");
  }
  const detail::TruncatedSpace space(n, cap);
  struct Entry {
    std::size_t to;
    double p;
  };
  std::vector<std::vector<Entry>> rows(space.size());
  for (std::size_t s = 0; s < space.size(); ++s) {
    const GapVector from{space.state(s)};
    for (const auto& [to, p] : enumerate_transitions(from, sigma, cap)) {
      rows[s].push_back({space.index(to), p});
    }
  }

  BruteForceResult result;
  std::vector<double> dist(space.size(), 0.0), next(space.size());
  dist[0] = 1.0;
  for (result.iterations = 1; result.iterations <= max_iterations; ++result.iterations) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < space.size(); ++s) {
      if (dist[s] == 0.0) continue;
      for (const auto& e : rows[s]) next[e.to] += dist[s] * e.p;
    }
    double change = 0.0;
    for (std::size_t s = 0; s < space.size(); ++s) change += std::abs(next[s] - dist[s]);
    dist.swap(next);
    result.last_change = change;
    if (change < 1e-12) {
      result.iteration_converged = true;
      break;
    }
  }
  for (std::size_t s = 0; s < space.size(); ++s) {
    auto d = space.state(s);
    if (std::find(d.begin(), d.end(), cap) != d.end()) result.boundary_mass += dist[s];
    if (dist[s] != 0.0) result.pmf[std::move(d)] = dist[s];
  }
  result.converged = result.iteration_converged && result.boundary_mass < 1e-6;
  return result;
}

}  // namespace mq
