#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mq/chain.hpp"
#include "mq/stats.hpp"

namespace {

using mq::ChoiceDistribution;
using mq::CParameter;
using mq::GapVector;
using mq::RandomSource;

ChoiceDistribution best2(std::size_t n) { return mq::best_of_c(CParameter(2.0), n); }

TEST(GapVector, RanksFromGaps) {
  const GapVector g{{2, 0, 5}};
  EXPECT_EQ(g.n(), 4u);
  EXPECT_EQ(g.rank(1), 1u);
  EXPECT_EQ(g.rank(2), 4u);
  EXPECT_EQ(g.rank(3), 5u);
  EXPECT_EQ(g.rank(4), 11u);
  EXPECT_EQ(g.ranks(), (std::vector<std::uint64_t>{1, 4, 5, 11}));
  EXPECT_EQ(g.total(), 7u);
  EXPECT_TRUE(GapVector::zeros(1).d.empty());
  EXPECT_THROW(GapVector::zeros(0), mq::ParameterError);
}

TEST(Step, TwoQueuesFromZero) {
  const auto sigma = best2(2);
  RandomSource rng(1);
  std::map<std::uint64_t, double> freq;
  const int trials = 1'000'000;
  for (int k = 0; k < trials; ++k) {
    GapVector g{{0}};
    const auto r = mq::step(g, sigma, rng);
    ASSERT_EQ(r.rank_error, r.activated_ball - 1);
    freq[g.d[0]] += 1.0 / trials;
  }
  EXPECT_NEAR(freq[0], 0.5, 0.002);
  EXPECT_NEAR(freq[1], 0.25, 0.002);
  EXPECT_NEAR(freq[2], 0.125, 0.002);
}

TEST(Step, FirstBallConsumesItsDot) {
  const auto sigma = ChoiceDistribution::first_only(3);
  RandomSource rng(2);
  GapVector g{{1, 0}};
  const auto r = mq::step(g, sigma, rng);
  EXPECT_EQ(g, (GapVector{{0, 0}}));
  EXPECT_EQ(r.rank_error, 0u);
  EXPECT_EQ(r.activated_ball, 1u);
  EXPECT_EQ(r.end_ball, 1u);
}

TEST(Step, RankErrorFromPreStepState) {
  // Only ball 3 is ever selected, so the rank error is r_3 - 1 before moving.
  const std::vector<double> w = {0.0, 0.0, 1.0};
  const auto sigma = ChoiceDistribution::from_weights(w);
  RandomSource rng(3);
  GapVector g{{2, 3}};
  const auto r = mq::step(g, sigma, rng);
  EXPECT_EQ(r.rank_error, 7u);  // ranks 1, 4, 8
  EXPECT_EQ(r.activated_ball, 3u);
}

TEST(Step, RejectsMismatchedSize) {
  RandomSource rng(1);
  GapVector g{{0, 0}};
  EXPECT_THROW(mq::step(g, best2(2), rng), mq::ParameterError);
  EXPECT_THROW(mq::step_fast(g, best2(4), rng), mq::ParameterError);
}

void expect_conserved(const GapVector& before, const GapVector& after,
                      const mq::StepResult& r) {
  if (r.end_ball < after.n()) {
    EXPECT_EQ(after.total() + 1, before.total());
    EXPECT_EQ(r.dots_at_infinity, 0u);
  } else {
    EXPECT_EQ(after.total(), before.total() + r.dots_at_infinity);
  }
  EXPECT_GE(r.end_ball, r.activated_ball);
}

TEST(Step, ConservationOnRandomStates) {
  RandomSource rng(4);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    const auto sigma = mq::best_of_c(CParameter(1.2 + 3.0 * rng.uniform01()), n);
    GapVector g = GapVector::zeros(n);
    for (auto& x : g.d) x = rng.uniform_index(6);
    GapVector a = g, b = g;
    expect_conserved(g, a, mq::step(a, sigma, rng));
    expect_conserved(g, b, mq::step_fast(b, sigma, rng));
  }
}

TEST(Step, TraceVisitsBallsInOrder) {
  const auto sigma = best2(5);
  RandomSource rng(5);
  GapVector g = GapVector::zeros(5);
  mq::TransitionTrace trace;
  for (int k = 0; k < 20000; ++k) {
    const auto r = mq::step(g, sigma, rng, &trace);
    ASSERT_FALSE(trace.visited.empty());
    EXPECT_EQ(trace.visited.front().ball, r.activated_ball);
    EXPECT_EQ(trace.activated_ball, r.activated_ball);
    EXPECT_EQ(trace.end_ball, r.end_ball);
    for (std::size_t j = 1; j < trace.visited.size(); ++j) {
      EXPECT_GE(trace.visited[j].ball, trace.visited[j - 1].ball);
    }
  }
}

// Successor histograms of step and step_fast from a fixed state, compared by
// a two-sample chi-square test.
void expect_same_successor_law(const GapVector& start, const ChoiceDistribution& sigma,
                               std::uint64_t seed) {
  RandomSource rng(seed);
  std::map<std::vector<std::uint64_t>, std::pair<std::uint64_t, std::uint64_t>> cells;
  const int trials = 1'000'000;
  for (int k = 0; k < trials; ++k) {
    GapVector a = start, b = start;
    mq::step(a, sigma, rng);
    mq::step_fast(b, sigma, rng);
    ++cells[a.d].first;
    ++cells[b.d].second;
  }
  std::vector<std::uint64_t> ha, hb;
  for (const auto& [state, counts] : cells) {
    ha.push_back(counts.first);
    hb.push_back(counts.second);
  }
  EXPECT_GT(mq::chi_square_two_sample(ha, hb).p_value, 1e-3);
}

TEST(StepFast, SameLawTwoQueues) { expect_same_successor_law(GapVector{{5}}, best2(2), 6); }

TEST(StepFast, SameLawThreeQueues) {
  expect_same_successor_law(GapVector{{2, 1}}, best2(3), 7);
  expect_same_successor_law(GapVector{{0, 3}}, mq::best_of_c(CParameter(1.5), 3), 8);
}

TEST(StepFast, SingleQueueIsNoop) {
  RandomSource rng(1);
  GapVector g = GapVector::zeros(1);
  const auto r = mq::step_fast(g, best2(1), rng);
  EXPECT_EQ(r.rank_error, 0u);
  EXPECT_TRUE(g.d.empty());
}

TEST(StationarySampler, Means) {
  RandomSource rng(9);
  const auto sigma = best2(4);
  std::vector<double> sums(3, 0.0);
  const int samples = 1'000'000;
  for (int k = 0; k < samples; ++k) {
    const auto g = mq::stationary_sampler(sigma, rng);
    for (std::size_t i = 0; i < 3; ++i) sums[i] += static_cast<double>(g.d[i]);
  }
  const std::vector<double> frozen = {4.0 / 3, 2.0, 4.0};
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(sums[i] / samples, frozen[i], 0.01 * frozen[i]);
}

TEST(StationarySampler, TwoQueuesZeroProbability) {
  RandomSource rng(10);
  int zeros = 0;
  for (int k = 0; k < 1'000'000; ++k) zeros += mq::stationary_sampler(best2(2), rng).d[0] == 0;
  EXPECT_NEAR(zeros / 1e6, 1.0 / 3, 0.002);
  EXPECT_TRUE(mq::stationary_sampler(best2(1), rng).d.empty());
}

TEST(StationaryPmf, RatioOfNeighbouringStates) {
  for (std::size_t n : {2, 3, 6}) {
    const auto sigma = best2(n);
    const auto params = mq::stationary_params(sigma);
    RandomSource rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      GapVector g = GapVector::zeros(n);
      for (auto& x : g.d) x = rng.uniform_index(5);
      const double base = mq::stationary_pmf(params, g);
      for (std::size_t i = 1; i < n; ++i) {
        GapVector up = g;
        ++up.d[i - 1];
        const double expected = static_cast<double>(i) / (n * sigma.sigma_upto(i));
        EXPECT_NEAR(mq::stationary_pmf(params, up) / base, expected, 1e-12);
      }
    }
  }
}

TEST(Run, ZeroStepsEchoesInitial) {
  RandomSource rng(1);
  mq::RunOptions o;
  o.checkpoints = {0};
  const GapVector start{{3, 1, 4}};
  const auto report = mq::run(start, best2(4), o, rng);
  EXPECT_EQ(report.final_state, start);
  EXPECT_EQ(report.measured, 0u);
  ASSERT_EQ(report.checkpoints.size(), 1u);
  EXPECT_EQ(report.checkpoints[0].ranks, start.ranks());
}

TEST(Run, TwoQueuesGapLaw) {
  RandomSource rng(12);
  mq::RunOptions o;
  o.steps = 1'000'000;
  o.burnin = 10'000;
  o.fast = true;
  const auto report = mq::run(GapVector::zeros(2), best2(2), o, rng);
  const auto pmf = mq::normalize(report.gap_histograms[0]);
  EXPECT_NEAR(pmf[0], 1.0 / 3, 0.005);
  EXPECT_NEAR(pmf[1], 2.0 / 9, 0.005);
  EXPECT_NEAR(report.mean_rank_error, 0.75, 0.02);
}

TEST(Run, MeanRankErrorFourQueues) {
  RandomSource rng(13);
  mq::RunOptions o;
  o.steps = 1'000'000;
  o.burnin = mq::default_burnin(4);
  o.fast = true;
  const auto report = mq::run(GapVector::zeros(4), best2(4), o, rng);
  EXPECT_NEAR(report.mean_rank_error, 2.375, 0.02 * 2.375);
  std::uint64_t total = 0;
  for (auto c : report.rank_error_histogram) total += c;
  EXPECT_EQ(total, report.measured);
}

TEST(Run, GapsUncorrelated) {
  RandomSource rng(14);
  const auto sigma = best2(4);
  mq::RunOptions o;
  o.steps = 1'000'000;
  o.fast = true;
  std::vector<std::vector<double>> series(3);
  mq::run(mq::stationary_sampler(sigma, rng), sigma, o, rng,
          [&](std::uint64_t, const GapVector& g, const mq::StepResult&) {
            for (std::size_t i = 0; i < 3; ++i) series[i].push_back(static_cast<double>(g.d[i]));
          });
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      EXPECT_LT(std::abs(mq::correlation(series[i], series[j])), 0.01) << i << " " << j;
    }
  }
}

TEST(Run, CheckpointsAtRequestedSteps) {
  RandomSource rng(15);
  mq::RunOptions o;
  o.steps = 100;
  o.burnin = 50;
  o.checkpoints = {150, 0, 75};
  const auto report = mq::run(GapVector::zeros(3), best2(3), o, rng);
  ASSERT_EQ(report.checkpoints.size(), 3u);
  EXPECT_EQ(report.checkpoints[0].step, 0u);
  EXPECT_EQ(report.checkpoints[1].step, 75u);
  EXPECT_EQ(report.checkpoints[2].step, 150u);
  EXPECT_EQ(report.checkpoints[2].ranks, report.final_state.ranks());
  EXPECT_EQ(report.measured, 100u);
}

TEST(Run, RejectsZeroThin) {
  RandomSource rng(1);
  mq::RunOptions o;
  o.thin = 0;
  EXPECT_THROW(mq::run(GapVector::zeros(2), best2(2), o, rng), mq::ParameterError);
}

TEST(DefaultBurnin, Values) {
  EXPECT_EQ(mq::default_burnin(1), 10000u);
  EXPECT_EQ(mq::default_burnin(2), 10000u);
  EXPECT_EQ(mq::default_burnin(1024), 354892u);
}

TEST(TransitionalFrequencies, TwoQueues) {
  RandomSource rng(16);
  const auto rates = mq::transitional_frequencies(best2(2), 1'000'000, rng);
  auto at = [&](std::uint64_t d, std::size_t ball) {
    const auto it = rates.find(mq::TransitionalState{GapVector{{d}}, ball});
    return it == rates.end() ? 0.0 : it->second;
  };
  // pi(d) * sigma_upto(ball)
  EXPECT_NEAR(at(0, 1), 1.0 / 4, 0.01);
  EXPECT_NEAR(at(1, 1), 1.0 / 6, 0.01);
  EXPECT_NEAR(at(0, 2), 1.0 / 3, 0.01);
  EXPECT_NEAR(at(1, 2), 2.0 / 9, 0.01);
}

TEST(BruteForce, TwoQueuesIsGeometric) {
  const auto result = mq::brute_force_stationary(best2(2), 60);
  EXPECT_TRUE(result.converged);
  std::map<std::vector<std::uint64_t>, double> geometric;
  for (std::uint64_t d = 0; d <= 60; ++d) {
    geometric[{d}] = (1.0 / 3) * std::pow(2.0 / 3, static_cast<double>(d));
  }
  EXPECT_LT(mq::tv_distance(result.pmf, geometric), 1e-6);
}

TEST(BruteForce, ThreeQueuesIsProductOfGeometrics) {
  const auto sigma = best2(3);
  const auto params = mq::stationary_params(sigma);
  const std::uint64_t cap = 48;
  const auto result = mq::brute_force_stationary(sigma, cap);
  EXPECT_TRUE(result.converged);
  std::map<std::vector<std::uint64_t>, double> product;
  for (std::uint64_t a = 0; a <= cap; ++a) {
    for (std::uint64_t b = 0; b <= cap; ++b) {
      product[{a, b}] = mq::stationary_pmf(params, GapVector{{a, b}});
    }
  }
  EXPECT_LT(mq::tv_distance(result.pmf, product), 1e-5);
}

TEST(BruteForce, SingleQueueIsTrivial) {
  const auto result = mq::brute_force_stationary(best2(1), 10);
  EXPECT_TRUE(result.converged);
  ASSERT_EQ(result.pmf.size(), 1u);
  EXPECT_NEAR(result.pmf.begin()->second, 1.0, 1e-15);
}

TEST(BruteForce, DivergentChoiceDoesNotConverge) {
  const std::vector<double> w = {0.0, 1.0};
  const auto result = mq::brute_force_stationary(ChoiceDistribution::from_weights(w), 30);
  EXPECT_FALSE(result.converged);
  EXPECT_GT(result.boundary_mass, 0.0);
}

}  // namespace
