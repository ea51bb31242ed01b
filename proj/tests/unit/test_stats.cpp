#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "mq/sampling.hpp"
#include "mq/stats.hpp"

namespace {

using mq::RandomSource;

std::vector<std::uint64_t> geometric_histogram(double p, int samples, RandomSource& rng) {
  std::vector<std::uint64_t> h;
  for (int i = 0; i < samples; ++i) {
    const auto g = mq::geom_sample(p, mq::GeomConvention::failures_before_success, rng);
    if (g >= h.size()) h.resize(g + 1, 0);
    ++h[g];
  }
  return h;
}

auto geometric_pmf(double p) {
  return [p](std::uint64_t k) { return p * std::pow(1.0 - p, static_cast<double>(k)); };
}

TEST(SpecialFunctions, ChiSquareQuantiles) {
  EXPECT_NEAR(mq::chi_square_sf(3.841458820694124, 1), 0.05, 1e-9);
  EXPECT_NEAR(mq::chi_square_sf(18.307038053275146, 10), 0.05, 1e-9);
  EXPECT_NEAR(mq::chi_square_sf(0.0, 4), 1.0, 1e-15);
  EXPECT_NEAR(mq::chi_square_sf(2.0, 2), std::exp(-1.0), 1e-12);
}

TEST(SpecialFunctions, KolmogorovQuantile) {
  EXPECT_NEAR(mq::kolmogorov_sf(1.3580986393225505), 0.05, 1e-6);
  EXPECT_EQ(mq::kolmogorov_sf(0.0), 1.0);
}

TEST(ChiSquare, ProportionalCountsGiveZero) {
  const std::vector<std::uint64_t> observed = {500, 250, 250};
  const std::vector<double> probs = {0.5, 0.25, 0.25};
  const auto r = mq::chi_square_gof(observed, probs);
  EXPECT_NEAR(r.statistic, 0.0, 1e-12);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
  EXPECT_NEAR(r.distance, 0.0, 1e-12);
}

TEST(ChiSquare, GeometricSelfConsistent) {
  RandomSource rng(1);
  const auto h = geometric_histogram(1.0 / 3, 1'000'000, rng);
  EXPECT_GT(mq::chi_square_gof(h, geometric_pmf(1.0 / 3)).p_value, 1e-3);
}

TEST(ChiSquare, DetectsWrongParameter) {
  RandomSource rng(2);
  const auto h = geometric_histogram(1.0 / 3, 1'000'000, rng);
  EXPECT_LT(mq::chi_square_gof(h, geometric_pmf(0.5)).p_value, 1e-6);
}

TEST(ChiSquare, RejectsSmallOrDegenerateInput) {
  const std::vector<std::uint64_t> few = {10, 20};
  EXPECT_THROW(mq::chi_square_gof(few, geometric_pmf(0.5)), mq::ParameterError);
  const std::vector<std::uint64_t> one = {1000};
  const std::vector<double> point = {1.0};
  EXPECT_THROW(mq::chi_square_gof(one, point), mq::ParameterError);
  const std::vector<std::uint64_t> outside = {100, 100, 100};
  const std::vector<double> narrow = {0.5, 0.5};
  EXPECT_THROW(mq::chi_square_gof(outside, narrow), mq::ParameterError);
}

TEST(ChiSquare, NullPValuesAreUniform) {
  RandomSource rng(3);
  int below = 0;
  const int reps = 500;
  for (int k = 0; k < reps; ++k) {
    const auto h = geometric_histogram(0.4, 2000, rng);
    below += mq::chi_square_gof(h, geometric_pmf(0.4)).p_value < 0.05;
  }
  EXPECT_NEAR(below / static_cast<double>(reps), 0.05, 0.02);
}

TEST(ChiSquareTwoSample, SameAndDifferentLaws) {
  RandomSource rng(4);
  const auto a = geometric_histogram(0.3, 200000, rng);
  const auto b = geometric_histogram(0.3, 200000, rng);
  const auto c = geometric_histogram(0.32, 200000, rng);
  EXPECT_GT(mq::chi_square_two_sample(a, b).p_value, 1e-3);
  EXPECT_LT(mq::chi_square_two_sample(a, c).p_value, 1e-6);
}

TEST(Ks, ExponentialSelfConsistentAndPower) {
  RandomSource rng(5);
  std::vector<double> x;
  for (int i = 0; i < 100000; ++i) x.push_back(mq::exp_sample(2.0, rng));
  EXPECT_GT(mq::ks_test_exponential(x, 2.0).p_value, 1e-3);
  EXPECT_LT(mq::ks_test_exponential(x, 2.2).p_value, 1e-6);
  EXPECT_THROW(mq::ks_test_exponential(x, 0.0), mq::ParameterError);
}

TEST(Ks, RepeatedValueIsFarFromExponential) {
  const std::vector<double> x(1000, 50.0);
  const auto r = mq::ks_test_exponential(x, 1.0);
  EXPECT_NEAR(r.distance, 1.0, 1e-9);
  EXPECT_LT(r.p_value, 1e-12);
}

TEST(Ks, NeedsEnoughSamples) {
  EXPECT_THROW(mq::ks_test_exponential(std::vector<double>(10, 1.0), 1.0), mq::ParameterError);
}

TEST(TotalVariation, BasicProperties) {
  const std::vector<double> p = {0.5, 0.5}, q = {0.0, 0.0, 1.0};
  EXPECT_EQ(mq::tv_distance(std::span<const double>(p), std::span<const double>(p)), 0.0);
  EXPECT_DOUBLE_EQ(mq::tv_distance(std::span<const double>(p), std::span<const double>(q)), 1.0);

  RandomSource rng(6);
  auto random_pmf = [&] {
    std::vector<double> v(6);
    double s = 0.0;
    for (auto& x : v) s += x = rng.uniform01();
    for (auto& x : v) x /= s;
    return v;
  };
  for (int k = 0; k < 200; ++k) {
    const auto a = random_pmf(), b = random_pmf(), c = random_pmf();
    const auto ab = mq::tv_distance(std::span<const double>(a), std::span<const double>(b));
    const auto ba = mq::tv_distance(std::span<const double>(b), std::span<const double>(a));
    const auto bc = mq::tv_distance(std::span<const double>(b), std::span<const double>(c));
    const auto ac = mq::tv_distance(std::span<const double>(a), std::span<const double>(c));
    EXPECT_DOUBLE_EQ(ab, ba);
    EXPECT_LE(ac, ab + bc + 1e-15);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(TotalVariation, MapsWithDisjointKeys) {
  const std::map<int, double> p = {{1, 0.25}, {2, 0.75}};
  const std::map<int, double> q = {{2, 0.75}, {3, 0.25}};
  EXPECT_DOUBLE_EQ(mq::tv_distance(p, q), 0.25);
}

TEST(Normalize, SumsToOne) {
  const std::vector<std::uint64_t> h = {1, 3, 0, 4};
  const auto p = mq::normalize(h);
  EXPECT_EQ(p, (std::vector<double>{0.125, 0.375, 0.0, 0.5}));
  EXPECT_EQ(mq::normalize(std::vector<std::uint64_t>{0, 0}), (std::vector<double>{0.0, 0.0}));
}

TEST(TailCurve, ConstantSamplesGiveStep) {
  const std::vector<double> samples(100, 10.0);
  const auto grid = mq::k_grid(0.5, 1.5, 4);
  ASSERT_EQ(grid.size(), 5u);
  const auto curve = mq::tail_curve(samples, 10.0, grid);
  EXPECT_EQ(curve[0].exceedance, 1.0);
  EXPECT_EQ(curve[2].exceedance, 1.0);  // k = 1: X >= mu
  EXPECT_EQ(curve[3].exceedance, 0.0);
  EXPECT_EQ(curve[4].exceedance, 0.0);
}

TEST(TailCurve, NonIncreasingAndBounded) {
  RandomSource rng(7);
  std::vector<double> samples;
  for (int i = 0; i < 10000; ++i) samples.push_back(mq::exp_sample(1.0, rng));
  const auto curve = mq::tail_curve(samples, 1.0, mq::k_grid(1.0, 6.0, 50));
  EXPECT_LE(curve.front().exceedance, 1.0);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LE(curve[i].exceedance, curve[i - 1].exceedance);
  }
  EXPECT_THROW(mq::tail_curve(samples, 0.0, mq::k_grid(1.0, 2.0, 2)), mq::ParameterError);
}

TEST(Correlation, Values) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {2, 4, 6, 8}, z = {4, 3, 2, 1};
  EXPECT_NEAR(mq::correlation(x, y), 1.0, 1e-15);
  EXPECT_NEAR(mq::correlation(x, z), -1.0, 1e-15);
  EXPECT_DOUBLE_EQ(mq::mean(x), 2.5);
  EXPECT_THROW(mq::correlation(x, std::vector<double>{1.0}), mq::ParameterError);
}

}  // namespace
