#pragma once

// Quantitative verification suites. Each check group returns a Verdict made
// of named checks with the measured value and the threshold it was held to.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mq/analytics.hpp"
#include "mq/chain.hpp"
#include "mq/choice.hpp"
#include "mq/ejp.hpp"
#include "mq/errors.hpp"
#include "mq/mqcore.hpp"
#include "mq/parallel.hpp"
#include "mq/sampling.hpp"
#include "mq/stats.hpp"

namespace mq {

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold
  std::optional<GofReport> gof;
};

struct Verdict {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;

  bool passed() const noexcept {
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  void append(const Verdict& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    seconds += other.seconds;
  }
};

inline constexpr double kSignificance = 1e-3;

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "stationary-chain", "stationary-ejp", "cankick",    "closed-forms",
      "bounds",           "concentration",  "logistic",   "divergence",
      "replay-equivalence", "oracle"};
  return names;
}

namespace detail {

class Recorder {
 public:
  explicit Recorder(std::string suite) : start_(std::chrono::steady_clock::now()) {
    verdict_.suite = std::move(suite);
  }

  void at_most(std::string name, double value, double threshold) {
    add(std::move(name), value <= threshold, value, threshold, "<=");
  }
  void less(std::string name, double value, double threshold) {
    add(std::move(name), value < threshold, value, threshold, "<");
  }
  void at_least(std::string name, double value, double threshold) {
    add(std::move(name), value >= threshold, value, threshold, ">=");
  }
  void greater(std::string name, double value, double threshold) {
    add(std::move(name), value > threshold, value, threshold, ">");
  }
  void within(std::string name, double value, double target, double tolerance) {
    add(std::move(name), std::abs(value - target) <= tolerance, value, tolerance,
        "|value - " + format(target) + "| <=");
  }
  void within_relative(std::string name, double value, double target, double fraction) {
    add(std::move(name), std::abs(value - target) <= fraction * std::abs(target), value,
        fraction, "relative error from " + format(target) + " <=");
  }
  void p_value(std::string name, const GofReport& gof, double alpha) {
    add(std::move(name), gof.p_value > alpha, gof.p_value, alpha, "p >");
    verdict_.checks.back().gof = gof;
  }
  void flag(std::string name, bool ok) { add(std::move(name), ok, ok ? 1.0 : 0.0, 1.0, "=="); }

  Verdict finish() {
    verdict_.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return std::move(verdict_);
  }

 private:
  static std::string format(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
  }

  void add(std::string name, bool ok, double value, double threshold, std::string relation) {
    verdict_.checks.push_back({std::move(name), ok, value, threshold, std::move(relation), {}});
  }

  Verdict verdict_;
  std::chrono::steady_clock::time_point start_;
};

inline std::string fmt_index(std::string_view prefix, std::size_t i) {
  return std::string(prefix) + std::to_string(i);
}

inline std::function<double(std::uint64_t)> geometric_pmf(double p) {
  return [p](std::uint64_t k) { return p * std::pow(1.0 - p, static_cast<double>(k)); };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Analytic identities.

inline Verdict verify_closed_forms() {
  detail::Recorder rec("closed-forms");
  for (std::size_t n : {2, 3, 10, 100, 1000}) {
    const double exact = expected_rank_error(best_of_c(CParameter(2.0), n));
    rec.at_most("c=2 n=" + std::to_string(n), std::abs(exact - rank_error_c2_closed(n)), 1e-9);
  }
  for (double eps : {0.25, 0.5, 0.75}) {
    for (std::size_t n : {4, 100}) {
      const double exact = expected_rank_error(best_of_c(CParameter(1.0 + eps), n));
      char name[64];
      std::snprintf(name, sizeof name, "c=1+%.2f n=%zu", eps, n);
      rec.at_most(name, std::abs(exact - rank_error_c1eps_closed(eps, n)), 1e-9);
    }
  }
  return rec.finish();
}

inline Verdict verify_bounds() {
  detail::Recorder rec("bounds");
  for (double c : {1.5, 2.0, 2.5, 3.0, 4.0, 8.0}) {
    const CParameter cp(c);
    for (std::size_t n : {10, 100, 1000}) {
      const double exact = expected_rank_error(best_of_c(cp, n));
      const auto b = rank_error_bounds(cp, n);
      char tag[48];
      std::snprintf(tag, sizeof tag, "c=%g n=%zu", c, n);
      const std::string t(tag);
      rec.at_least(t + " exact - integral lower", exact - b.integral_lower, 0.0);
      rec.at_least(t + " integral upper - exact", b.integral_upper - exact, 0.0);
      if (b.crude_lower) {
        rec.at_least(t + " exact - crude lower", exact - *b.crude_lower, 0.0);
        rec.at_least(t + " crude upper - exact", *b.crude_upper - exact, 0.0);
      }
    }
  }
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Chain.

struct ChainLawOptions {
  std::size_t n = 2;
  double c = 2.0;
  std::uint64_t steps = 1'000'000;
  std::uint64_t burnin = 10'000;
  std::uint64_t thin = 50;               // stride between gap samples
  double mean_tolerance = 0.02;          // absolute
};

/// Long run from the all-zero state: each gap marginal against Geom(p_i) on a
/// thinned subsequence, and the mean rank error against its exact value.
inline Verdict verify_chain_law(const ChainLawOptions& o, const RandomSource& seed) {
  detail::Recorder rec("stationary-chain");
  const auto sigma = best_of_c(CParameter(o.c), o.n);
  const auto params = stationary_params(sigma);
  RandomSource rng = seed.split("chain-law");
  RunOptions ro;
  ro.steps = o.steps;
  ro.burnin = o.burnin;
  ro.thin = o.thin;
  ro.fast = true;
  const auto report = run(GapVector::zeros(o.n), sigma, ro, rng);
  const double alpha = kSignificance / static_cast<double>(std::max<std::size_t>(1, o.n - 1));
  for (std::size_t i = 0; i + 1 < o.n; ++i) {
    rec.p_value(detail::fmt_index("chi-square d_", i + 1),
                chi_square_gof(report.gap_histograms[i], detail::geometric_pmf(params.p[i])),
                alpha);
  }
  rec.within("mean rank error", report.mean_rank_error, expected_rank_error(sigma),
             o.mean_tolerance);
  return rec.finish();
}

/// n samples from the exact stationary sampler, one step each; every gap
/// marginal must still match Geom(p_i).
inline Verdict verify_one_step_chain(std::size_t n, double c, std::uint64_t samples,
                                     const RandomSource& seed) {
  detail::Recorder rec("stationary-chain");
  const auto sigma = best_of_c(CParameter(c), n);
  const auto params = stationary_params(sigma);
  RandomSource rng = seed.split("one-step-chain");
  std::vector<Histogram> hist(n - 1);
  for (std::uint64_t k = 0; k < samples; ++k) {
    GapVector state = stationary_sampler(sigma, rng);
    step(state, sigma, rng);
    for (std::size_t i = 0; i + 1 < n; ++i) histogram_add(hist[i], state.d[i]);
  }
  const double alpha = kSignificance / static_cast<double>(std::max<std::size_t>(1, n - 1));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    rec.p_value(detail::fmt_index("one-step chi-square d_", i + 1),
                chi_square_gof(hist[i], detail::geometric_pmf(params.p[i])), alpha);
  }
  return rec.finish();
}

inline Verdict verify_chain_mean(std::size_t n, double c, std::uint64_t burnin,
                                 std::uint64_t steps, double relative,
                                 const RandomSource& seed) {
  detail::Recorder rec("stationary-chain");
  const auto sigma = best_of_c(CParameter(c), n);
  RandomSource rng = seed.split("chain-mean");
  RunOptions ro;
  ro.steps = steps;
  ro.burnin = burnin;
  ro.fast = true;
  const auto report = run(GapVector::zeros(n), sigma, ro, rng);
  rec.within_relative("mean rank error n=" + std::to_string(n), report.mean_rank_error,
                      expected_rank_error(sigma), relative);
  return rec.finish();
}

/// Truncated exact stationary law for n = 2 against Geom(p_1).
inline Verdict verify_oracle(double c = 2.0, std::uint64_t cap = 60) {
  detail::Recorder rec("oracle");
  const auto sigma = best_of_c(CParameter(c), 2);
  const double p = stationary_params(sigma).p[0];
  const auto oracle = brute_force_stationary(sigma, cap);
  std::map<std::vector<std::uint64_t>, double> geom;
  for (std::uint64_t k = 0; k <= cap; ++k) geom[{k}] = p * std::pow(1.0 - p, static_cast<double>(k));
  rec.flag("power iteration converged", oracle.converged);
  rec.less("TV(oracle, Geom)", tv_distance(oracle.pmf, geom), 1e-6);
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Exponential-jump process.

struct EjpLawOptions {
  std::size_t n = 4;
  double c = 2.0;
  std::uint64_t burnin = 10'000;
  std::uint64_t steps = 1'000'000;
  std::uint64_t one_step_trials = 100'000;
};

inline Verdict verify_ejp_law(const EjpLawOptions& o, const RandomSource& seed) {
  detail::Recorder rec("stationary-ejp");
  const auto sigma = best_of_c(CParameter(o.c), o.n);
  const auto params = stationary_params(sigma);
  const std::size_t gaps = o.n - 1;

  RandomSource rng = seed.split("ejp-run");
  TokenState state = TokenState::zeros(o.n);
  for (std::uint64_t s = 0; s < o.burnin; ++s) ejp_step(state, sigma, rng);
  std::vector<long double> sums(gaps, 0.0L);
  for (std::uint64_t s = 0; s < o.steps; ++s) {
    ejp_step(state, sigma, rng);
    for (std::size_t i = 0; i < gaps; ++i) sums[i] += state.t[i + 1] - state.t[i];
  }
  for (std::size_t i = 0; i < gaps; ++i) {
    rec.within_relative(detail::fmt_index("mean d_", i + 1),
                        static_cast<double>(sums[i] / o.steps), 1.0 / params.lambda[i], 0.03);
  }

  RandomSource one = seed.split("ejp-one-step");
  std::vector<std::vector<double>> after(gaps);
  for (std::uint64_t k = 0; k < o.one_step_trials; ++k) {
    TokenState s = TokenState::from_gaps(ejp_stationary_gap_sampler(sigma, one));
    ejp_step(s, sigma, one);
    for (std::size_t i = 0; i < gaps; ++i) after[i].push_back(s.t[i + 1] - s.t[i]);
  }
  const double alpha = kSignificance / static_cast<double>(std::max<std::size_t>(1, gaps));
  for (std::size_t i = 0; i < gaps; ++i) {
    rec.p_value(detail::fmt_index("one-step KS d_", i + 1),
                ks_test_exponential(std::move(after[i]), params.lambda[i]), alpha);
  }
  return rec.finish();
}

inline Verdict verify_cankick(std::size_t n, std::uint64_t trials, double horizon,
                              const RandomSource& seed) {
  detail::Recorder rec("cankick");
  const auto runs = parallel_trials(trials, seed.split("cankick"),
                                    [&](std::size_t, RandomSource& r) {
                                      return can_kick_run(n, horizon, r);
                                    });
  const double alpha = kSignificance / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> gap;
    gap.reserve(runs.size());
    for (const auto& g : runs) gap.push_back(g[i]);
    rec.p_value("KS d_" + std::to_string(i) + " vs Exp(" + std::to_string(n - i) + ")",
                ks_test_exponential(std::move(gap), static_cast<double>(n - i)), alpha);
  }
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Concentration.

inline Verdict verify_concentration(std::size_t n_max, std::uint64_t deletions,
                                    std::size_t n_tail, std::uint64_t tail_samples,
                                    const RandomSource& seed) {
  detail::Recorder rec("concentration");
  {
    const auto sigma = best_of_c(CParameter(2.0), n_max);
    RandomSource rng = seed.split("concentration-max");
    RunOptions ro;
    ro.steps = deletions;
    ro.fast = true;
    const auto report = run(stationary_sampler(sigma, rng), sigma, ro, rng);
    const double mu = concentration_quantities(n_max).mu;
    rec.at_most("max rank error n=" + std::to_string(n_max) + " vs 3 mu",
                static_cast<double>(report.max_rank_error), 3.0 * mu);
  }
  {
    const auto sigma = best_of_c(CParameter(2.0), n_tail);
    const auto q = concentration_quantities(n_tail);
    RandomSource rng = seed.split("concentration-tail");
    std::vector<double> samples;
    samples.reserve(tail_samples);
    RunOptions ro;
    ro.steps = tail_samples;
    ro.burnin = 10'000;
    ro.fast = true;
    run(stationary_sampler(sigma, rng), sigma, ro, rng,
        [&](std::uint64_t, const GapVector& g, const StepResult&) {
          samples.push_back(static_cast<double>(g.rank(n_tail) - 1));
        });
    const auto grid = k_grid(2.0, 6.0, 40);
    const auto curve = tail_curve(samples, q.mu, grid);
    double worst = -1.0;  // largest empirical - bound
    double worst_k = 2.0;
    for (const auto& pt : curve) {
      const double gap = pt.exceedance - janson_tail(pt.k, q.mu, q.p_star);
      if (gap > worst) {
        worst = gap;
        worst_k = pt.k;
      }
    }
    char name[96];
    std::snprintf(name, sizeof name, "tail of r_%zu - 1 minus bound, worst at k=%.2f", n_tail,
                  worst_k);
    rec.at_most(name, worst, 0.0);
  }
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Logistic profile and divergence.

inline Verdict verify_logistic(const LogisticOptions& options, const RandomSource& seed) {
  detail::Recorder rec("logistic");
  RandomSource rng = seed.split("logistic");
  const auto rows = logistic_positions(options, rng);
  for (const auto& row : rows) {
    char name[64];
    std::snprintf(name, sizeof name, "finite-n x=%.2f", row.x);
    rec.within(name, row.finite_n, row.limit, 0.02);
  }
  for (const auto& row : rows) {
    char name[64];
    std::snprintf(name, sizeof name, "empirical x=%.2f", row.x);
    rec.within(name, row.empirical, row.limit, 0.05);
  }
  return rec.finish();
}

inline Verdict verify_divergence(std::size_t n, std::uint64_t early, std::uint64_t late,
                                 std::size_t trials, const RandomSource& seed) {
  detail::Recorder rec("divergence");
  RandomSource rng = seed.split("divergence");
  const auto means =
      divergence_experiment(ChoiceDistribution::uniform(n), {early, late}, trials, rng);
  rec.flag("uniform sigma violates the convergence condition",
           !ChoiceDistribution::uniform(n).satisfies_star());
  rec.greater("mean spread at " + std::to_string(late) + " minus at " + std::to_string(early),
              means[1] - means[0], 0.0);
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Data structure.

struct ReplayCheckOptions {
  std::size_t n = 16;
  double c = 2.0;
  std::uint64_t initial = 10'000'000;
  std::uint64_t deletions = 1'000'000;
  std::uint64_t burnin = 100'000;
  std::size_t stress_threads = 8;
  std::uint64_t stress_ops = 1'000'000;
};

inline Verdict verify_replay(const ReplayCheckOptions& o, const RandomSource& seed) {
  detail::Recorder rec("replay-equivalence");
  const auto sigma = best_of_c(CParameter(o.c), o.n);

  RandomSource replay_rng = seed.split("replay");
  ReplayOptions ro;
  ro.n = o.n;
  ro.c = o.c;
  ro.initial = o.initial;
  ro.deletions = o.deletions + o.burnin;
  ro.burnin = o.burnin;
  if (ro.initial < 4 * ro.deletions) ro.initial = 4 * ro.deletions;
  const auto replay = sequential_replay(ro, replay_rng, true);

  RandomSource chain_rng = seed.split("replay-chain");
  RunOptions chain;
  chain.steps = o.deletions;
  chain.burnin = o.burnin;
  chain.fast = true;
  const auto report = run(GapVector::zeros(o.n), sigma, chain, chain_rng);
  rec.less("TV(replay, chain) rank-error histograms",
           tv_distance(normalize(replay.histogram), normalize(report.rank_error_histogram)),
           0.05);

  bool ascending = true;
  for (const auto& pops : replay.pops) {
    for (std::size_t k = 1; k < pops.size(); ++k) ascending = ascending && pops[k - 1] < pops[k];
  }
  rec.flag("replay per-queue pops strictly ascending", ascending);

  StressOptions mixed;
  mixed.queues = o.n;
  mixed.threads = o.stress_threads;
  mixed.ops = o.stress_ops;
  mixed.insert_fraction = 0.5;
  mixed.prepopulate = 1024;
  mixed.c = o.c;
  RandomSource stress_rng = seed.split("stress-mixed");
  const auto r = stress_test(mixed, stress_rng);
  rec.at_most("stress lost uids", static_cast<double>(r.lost), 0.0);
  rec.at_most("stress duplicated uids", static_cast<double>(r.duplicated + r.phantom), 0.0);
  rec.flag("stress live count conserved", r.ok);

  StressOptions draining = mixed;
  draining.insert_fraction = 0.0;
  draining.prepopulate = o.stress_ops;
  draining.log_pops = true;
  RandomSource drain_rng = seed.split("stress-delete");
  const auto d = stress_test(draining, drain_rng);
  rec.flag("concurrent deletion-only per-queue pops ascending", d.per_queue_ascending && d.ok);
  return rec.finish();
}

// ---------------------------------------------------------------------------
// Named suites.

struct SuiteConfig {
  std::uint64_t seed = 1;
  std::optional<std::size_t> n;  // overrides the suite's problem size
  std::optional<double> c;
};

/// Runs a named suite; with no overrides this is exactly the acceptance
/// configuration. Throws ParameterError for an unknown name.
inline Verdict run_suite(std::string_view name, const SuiteConfig& config) {
  const RandomSource seed(config.seed);
  const double c = config.c.value_or(2.0);
  Verdict v;
  v.suite = std::string(name);
  if (name == "closed-forms") {
    v.append(verify_closed_forms());
  } else if (name == "bounds") {
    v.append(verify_bounds());
  } else if (name == "oracle") {
    v.append(verify_oracle(c));
  } else if (name == "stationary-chain") {
    if (config.n) {
      v.append(verify_one_step_chain(*config.n, c, 100'000, seed));
    } else {
      v.append(verify_chain_law(ChainLawOptions{.n = 2, .c = c}, seed));
      v.append(verify_one_step_chain(8, c, 100'000, seed));
      v.append(verify_chain_mean(16, c, 100'000, 1'000'000, 0.02, seed));
    }
  } else if (name == "stationary-ejp") {
    v.append(verify_ejp_law(EjpLawOptions{.n = config.n.value_or(4), .c = c}, seed));
  } else if (name == "cankick") {
    v.append(verify_cankick(config.n.value_or(10), 100'000, 100.0, seed));
  } else if (name == "concentration") {
    const std::size_t n = config.n.value_or(64);
    v.append(verify_concentration(n, static_cast<std::uint64_t>(n) * n * n, 4, 1'000'000, seed));
  } else if (name == "logistic") {
    LogisticOptions lo;
    lo.n = config.n.value_or(4096);
    lo.burnin = 50 * lo.n;
    lo.steps = 500 * lo.n;
    v.append(verify_logistic(lo, seed));
  } else if (name == "divergence") {
    v.append(verify_divergence(config.n.value_or(8), 10'000, 100'000, 100, seed));
  } else if (name == "replay-equivalence") {
    ReplayCheckOptions ro;
    ro.n = config.n.value_or(16);
    ro.c = c;
    v.append(verify_replay(ro, seed));
  } else {
    throw ParameterError("unknown suite '" + std::string(name) + "'");
  }
  return v;
}

}  // namespace mq
