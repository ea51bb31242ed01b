#pragma once

// Exponential-jump process: n tokens on the real line; each step the token of
// rank i* ~ sigma jumps an Exp(1) distance to the right.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "mq/analytics.hpp"
#include "mq/chain.hpp"
#include "mq/choice.hpp"
#include "mq/errors.hpp"
#include "mq/parallel.hpp"
#include "mq/sampling.hpp"

namespace mq {

/// Sorted token positions t_1 <= ... <= t_n.
struct TokenState {
  std::vector<double> t;
  std::uint64_t steps = 0;

  /// All tokens at 0, the fresh-population start.
  static TokenState zeros(std::size_t n) {
    if (n == 0) throw ParameterError("n must be >= 1");
    return TokenState{std::vector<double>(n, 0.0), 0};
  }

  static TokenState from_gaps(const std::vector<double>& gaps, double origin = 0.0) {
    TokenState s;
    s.t.reserve(gaps.size() + 1);
    s.t.push_back(origin);
    for (double g : gaps) s.t.push_back(s.t.back() + g);
    return s;
  }

  std::size_t n() const noexcept { return t.size(); }

  /// d_i = t_{i+1} - t_i, i = 1..n-1.
  std::vector<double> gaps() const {
    std::vector<double> d;
    for (std::size_t i = 1; i < t.size(); ++i) d.push_back(t[i] - t[i - 1]);
    return d;
  }

  double spread() const noexcept { return t.back() - t.front(); }

  /// Mean of the first i positions.
  double prefix_mean(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < i; ++j) s += t[j];
    return s / static_cast<double>(i);
  }

  friend bool operator==(const TokenState&, const TokenState&) = default;
};

enum class JumpMode {
  reinsert,  // move the token and restore order by binary-search reinsertion
  billiard,  // the moving ball hands its remaining distance on at collisions
};

struct Segment {
  std::size_t ball = 0;  // 1-based rank of the moving ball
  double from = 0.0;
  double to = 0.0;
};

struct EjpStepResult {
  std::size_t selected = 0;
  double distance = 0.0;
};

inline EjpStepResult ejp_step(TokenState& state, const ChoiceDistribution& sigma,
                              RandomSource& rng, JumpMode mode = JumpMode::reinsert,
                              std::vector<Segment>* segments = nullptr) {
  if (state.n() != sigma.n()) {
    throw ParameterError("token state and choice distribution disagree on n");
  }
  EjpStepResult r;
  r.selected = sigma.sample(rng);
  r.distance = exp_sample(1.0, rng);
  auto& t = state.t;
  const std::size_t idx = r.selected - 1;
  const double target = t[idx] + r.distance;
  if (segments) segments->clear();

  if (mode == JumpMode::reinsert) {
    const auto pos = std::upper_bound(t.begin() + static_cast<std::ptrdiff_t>(idx) + 1,
                                      t.end(), target);
    std::rotate(t.begin() + static_cast<std::ptrdiff_t>(idx),
                t.begin() + static_cast<std::ptrdiff_t>(idx) + 1, pos);
    *(pos - 1) = target;
    if (segments) segments->push_back({r.selected, target - r.distance, target});
  } else {
    std::size_t j = idx;
    while (j + 1 < t.size() && target > t[j + 1]) {
      if (segments) segments->push_back({j + 1, t[j], t[j + 1]});
      t[j] = t[j + 1];
      ++j;
    }
    if (segments) segments->push_back({j + 1, t[j], target});
    t[j] = target;
  }
  ++state.steps;
  return r;
}

/// Independent d_i ~ Exp(n sigma_upto(i) - i).
inline std::vector<double> ejp_stationary_gap_sampler(const ChoiceDistribution& sigma,
                                                      RandomSource& rng) {
  const auto params = stationary_params(sigma);
  std::vector<double> gaps;
  gaps.reserve(params.lambda.size());
  for (double rate : params.lambda) gaps.push_back(exp_sample(rate, rng));
  return gaps;
}

/// Can-kicking: all n cans start at 0; a walker moves right and kicks every
/// can she reaches an Exp(1) distance ahead. Returns the distances
/// (t_1 - t_0, t_2 - t_1, ..., t_n - t_{n-1}) at the moment she reaches t_0.
inline std::vector<double> can_kick_run(std::size_t n, double horizon, RandomSource& rng) {
  if (n == 0) throw ParameterError("can_kick_run: n must be >= 1");
  if (!(horizon > 0.0)) throw ParameterError("can_kick_run: horizon must be positive");
  std::vector<double> t(n, 0.0);
  while (t.front() < horizon) {
    const double target = t.front() + exp_sample(1.0, rng);
    const auto pos = std::upper_bound(t.begin() + 1, t.end(), target);
    std::rotate(t.begin(), t.begin() + 1, pos);
    *(pos - 1) = target;
  }
  std::vector<double> gaps;
  gaps.reserve(n);
  double previous = horizon;
  for (double x : t) {
    gaps.push_back(x - previous);
    previous = x;
  }
  return gaps;
}

/// Trial-averaged spread t_n - t_1 at each checkpoint (step counts, sorted
/// ascending), starting from all tokens at 0.
inline std::vector<double> divergence_experiment(const ChoiceDistribution& sigma,
                                                 std::vector<std::uint64_t> checkpoints,
                                                 std::size_t trials, RandomSource& rng) {
  if (trials == 0) throw ParameterError("divergence_experiment: need trials >= 1");
  std::sort(checkpoints.begin(), checkpoints.end());
  const auto per_trial = parallel_trials(trials, rng, [&](std::size_t, RandomSource& r) {
    TokenState state = TokenState::zeros(sigma.n());
    std::vector<double> spreads;
    std::uint64_t s = 0;
    for (std::uint64_t checkpoint : checkpoints) {
      for (; s < checkpoint; ++s) ejp_step(state, sigma, r);
      spreads.push_back(state.spread());
    }
    return spreads;
  });
  std::vector<double> means(checkpoints.size(), 0.0);
  for (const auto& spreads : per_trial) {
    for (std::size_t k = 0; k < spreads.size(); ++k) means[k] += spreads[k];
  }
  for (double& m : means) m /= static_cast<double>(trials);
  return means;
}

struct LogisticRow {
  double x = 0.0;
  double empirical = 0.0;
  double finite_n = 0.0;  // exact stationary expectation at this n
  double limit = 0.0;     // log(x / (1 - x))
};

struct LogisticOptions {
  std::size_t n = 4096;
  std::uint64_t burnin = 0;
  std::uint64_t steps = 0;
  std::uint64_t snapshot_every = 0;  // 0: every n steps
  std::size_t trials = 1;
  InitKind init = InitKind::stationary;
  std::vector<double> grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

/// Empirical E[t_{ceil(xn)} - t_{ceil(n/2)}] for the best-of-2 EJP, averaged
/// over snapshots taken after burn-in, next to the exact finite-n expectation
/// and its large-n limit.
inline std::vector<LogisticRow> logistic_positions(const LogisticOptions& options,
                                                   RandomSource& rng) {
  const std::size_t n = options.n;
  if (n < 2) throw ParameterError("logistic_positions: n must be >= 2");
  const auto sigma = best_of_c(CParameter(2.0), n);
  const std::uint64_t every = options.snapshot_every ? options.snapshot_every : n;
  const std::size_t mid = normalized_index(0.5, n) - 1;
  std::vector<std::size_t> at;
  for (double x : options.grid) {
    if (!(x > 0.0 && x < 1.0)) throw ParameterError("logistic grid must lie in (0, 1)");
    at.push_back(std::max<std::size_t>(1, normalized_index(x, n)) - 1);
  }

  struct Sums {
    std::vector<double> offsets;
    std::uint64_t snapshots = 0;
  };
  const auto per_trial = parallel_trials(options.trials, rng, [&](std::size_t, RandomSource& r) {
    TokenState state = options.init == InitKind::stationary
                           ? TokenState::from_gaps(ejp_stationary_gap_sampler(sigma, r))
                           : TokenState::zeros(n);
    for (std::uint64_t s = 0; s < options.burnin; ++s) ejp_step(state, sigma, r);
    Sums sums{std::vector<double>(at.size(), 0.0), 0};
    for (std::uint64_t s = 1; s <= options.steps; ++s) {
      ejp_step(state, sigma, r);
      if (s % every == 0) {
        for (std::size_t k = 0; k < at.size(); ++k) {
          sums.offsets[k] += state.t[at[k]] - state.t[mid];
        }
        ++sums.snapshots;
      }
    }
    return sums;
  });

  std::vector<double> totals(at.size(), 0.0);
  std::uint64_t snapshots = 0;
  for (const auto& s : per_trial) {
    for (std::size_t k = 0; k < at.size(); ++k) totals[k] += s.offsets[k];
    snapshots += s.snapshots;
  }
  std::vector<LogisticRow> rows;
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double x = options.grid[k];
    rows.push_back({x, snapshots ? totals[k] / static_cast<double>(snapshots) : 0.0,
                    logistic_profile(sigma, x), logistic_limit(x)});
  }
  return rows;
}

}  // namespace mq
