#pragma once

// Goodness-of-fit machinery: Pearson chi-square with tail pooling,
// one-sample Kolmogorov-Smirnov, total variation, empirical tail curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mq/errors.hpp"

namespace mq {

struct GofReport {
  std::string test;
  double statistic = 0.0;
  double p_value = 1.0;
  double distance = 0.0;  // TV for chi-square tests, sup-distance for KS
  std::uint64_t sample_size = 0;
  std::size_t bins = 0;
};

namespace detail {

// Regularized lower incomplete gamma P(a, x) by its power series.
inline double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 100000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by Lentz's continued fraction.
inline double gamma_q_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

/// Q(a, x) = Gamma(a, x) / Gamma(a).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw ParameterError("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - detail::gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(detail::gamma_q_fraction(a, x), 0.0, 1.0);
}

/// Upper tail of the chi-square distribution.
inline double chi_square_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * statistic);
}

/// Pearson test of a histogram over {0, 1, 2, ...} against a pmf on the same
/// support. Consecutive values are merged until each bin expects at least
/// `min_expected` counts; everything past the last full bin is pooled into a
/// tail bin carrying the remaining probability mass.
inline GofReport chi_square_gof(std::span<const std::uint64_t> observed,
                                const std::function<double(std::uint64_t)>& pmf,
                                double min_expected = 5.0) {
  std::uint64_t total = 0;
  for (auto c : observed) total += c;
  if (total < 100) throw ParameterError("chi_square_gof: need at least 100 samples");
  const double n = static_cast<double>(total);

  struct Bin {
    double observed = 0.0;
    double expected = 0.0;
  };
  std::vector<Bin> bins;
  Bin open;
  double covered = 0.0;
  std::uint64_t v = 0;
  // Past the observed range, keep forming bins only while the uncovered mass
  // could still fill two of them.
  while (v < observed.size() || (1.0 - covered) * n >= 2.0 * min_expected) {
    if (v > (std::uint64_t{1} << 26)) break;
    const double p = pmf(v);
    open.expected += p * n;
    open.observed += v < observed.size() ? static_cast<double>(observed[v]) : 0.0;
    covered += p;
    ++v;
    if (open.expected >= min_expected) {
      bins.push_back(open);
      open = {};
    }
  }
  // Tail: all values >= v plus whatever is left in the open bin.
  Bin tail = open;
  tail.expected += std::max(0.0, 1.0 - covered) * n;
  for (std::uint64_t w = v; w < observed.size(); ++w) {
    tail.observed += static_cast<double>(observed[w]);
  }
  if (tail.expected >= min_expected || bins.empty()) {
    bins.push_back(tail);
  } else {
    bins.back().observed += tail.observed;
    bins.back().expected += tail.expected;
  }
  if (bins.size() < 2) {
    throw ParameterError("chi_square_gof: fewer than 2 bins after merging");
  }

  GofReport report;
  report.test = "chi-square";
  report.sample_size = total;
  report.bins = bins.size();
  double stat = 0.0;
  double tv = 0.0;
  for (const auto& b : bins) {
    const double diff = b.observed - b.expected;
    stat += diff * diff / b.expected;
    tv += std::abs(diff);
  }
  report.statistic = stat;
  report.distance = 0.5 * tv / n;
  report.p_value = chi_square_sf(stat, static_cast<double>(bins.size() - 1));
  return report;
}

/// Pearson test over a finite support with explicit probabilities. Cells with
/// small expectation are merged with their neighbours.
inline GofReport chi_square_gof(std::span<const std::uint64_t> observed,
                                std::span<const double> probabilities,
                                double min_expected = 5.0) {
  if (observed.size() > probabilities.size()) {
    throw ParameterError("chi_square_gof: observations outside the support");
  }
  return chi_square_gof(
      observed,
      [&](std::uint64_t v) { return v < probabilities.size() ? probabilities[v] : 0.0; },
      min_expected);
}

/// Two-sample chi-square test of homogeneity between two histograms on
/// {0, 1, ...}. Cells are merged left to right until the pooled count reaches
/// 2 * min_expected; the remainder joins the last cell.
inline GofReport chi_square_two_sample(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b,
                                       double min_expected = 5.0) {
  std::uint64_t na = 0, nb = 0;
  for (auto c : a) na += c;
  for (auto c : b) nb += c;
  if (na < 100 || nb < 100) {
    throw ParameterError("chi_square_two_sample: need at least 100 samples each");
  }
  const std::size_t width = std::max(a.size(), b.size());
  const double fa = static_cast<double>(na) / static_cast<double>(na + nb);
  const double fb = 1.0 - fa;
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> open{0.0, 0.0};
  for (std::size_t v = 0; v < width; ++v) {
    open.first += v < a.size() ? static_cast<double>(a[v]) : 0.0;
    open.second += v < b.size() ? static_cast<double>(b[v]) : 0.0;
    const double pooled = open.first + open.second;
    if (pooled * std::min(fa, fb) >= min_expected) {
      cells.push_back(open);
      open = {0.0, 0.0};
    }
  }
  if (open.first + open.second > 0.0) {
    if (cells.empty()) {
      cells.push_back(open);
    } else {
      cells.back().first += open.first;
      cells.back().second += open.second;
    }
  }
  if (cells.size() < 2) {
    throw ParameterError("chi_square_two_sample: fewer than 2 bins after merging");
  }
  GofReport report;
  report.test = "chi-square-two-sample";
  report.sample_size = na + nb;
  report.bins = cells.size();
  double stat = 0.0;
  double tv = 0.0;
  for (const auto& [oa, ob] : cells) {
    const double pooled = oa + ob;
    const double ea = pooled * fa;
    const double eb = pooled * fb;
    stat += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    tv += std::abs(oa / static_cast<double>(na) - ob / static_cast<double>(nb));
  }
  report.statistic = stat;
  report.distance = 0.5 * tv;
  report.p_value = chi_square_sf(stat, static_cast<double>(cells.size() - 1));
  return report;
}

/// Asymptotic Kolmogorov distribution: Pr[sqrt(N) D > t].
inline double kolmogorov_sf(double t) {
  if (t < 0.03) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// One-sample KS test against an arbitrary continuous CDF.
inline GofReport ks_test(std::vector<double> samples,
                         const std::function<double(double)>& cdf) {
  if (samples.size() < 100) throw ParameterError("ks_test: need at least 100 samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    sup = std::max({sup, (static_cast<double>(i) + 1.0) / n - f,
                    f - static_cast<double>(i) / n});
  }
  GofReport report;
  report.test = "kolmogorov-smirnov";
  report.statistic = sup;
  report.distance = sup;
  report.sample_size = samples.size();
  report.p_value = kolmogorov_sf(std::sqrt(n) * sup);
  return report;
}

inline GofReport ks_test_exponential(std::vector<double> samples, double rate) {
  if (!(rate > 0.0)) throw ParameterError("ks_test_exponential: rate must be positive");
  return ks_test(std::move(samples), [rate](double x) {
    return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
  });
}

/// (1/2) sum |p - q| over the union of both supports.
template <class Key>
double tv_distance(const std::map<Key, double>& p, const std::map<Key, double>& q) {
  double sum = 0.0;
  for (const auto& [k, v] : p) {
    auto it = q.find(k);
    sum += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : q) {
    if (!p.contains(k)) sum += std::abs(v);
  }
  return 0.5 * sum;
}

inline double tv_distance(std::span<const double> p, std::span<const double> q) {
  const std::size_t width = std::max(p.size(), q.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < width; ++i) {
    const double a = i < p.size() ? p[i] : 0.0;
    const double b = i < q.size() ? q[i] : 0.0;
    sum += std::abs(a - b);
  }
  return 0.5 * sum;
}

/// Normalises a histogram to a pmf.
inline std::vector<double> normalize(std::span<const std::uint64_t> histogram) {
  std::uint64_t total = 0;
  for (auto c : histogram) total += c;
  std::vector<double> pmf(histogram.size(), 0.0);
  if (total == 0) return pmf;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    pmf[i] = static_cast<double>(histogram[i]) / static_cast<double>(total);
  }
  return pmf;
}

struct TailPoint {
  double k = 0.0;
  double exceedance = 0.0;  // empirical Pr[X >= k mu]
};

inline std::vector<TailPoint> tail_curve(std::span<const double> samples, double mu,
                                         std::span<const double> k_grid) {
  if (!(mu > 0.0)) throw ParameterError("tail_curve: mu must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<TailPoint> curve;
  for (double k : k_grid) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), k * mu);
    const double count = static_cast<double>(sorted.end() - it);
    curve.push_back({k, sorted.empty() ? 0.0 : count / static_cast<double>(sorted.size())});
  }
  return curve;
}

/// Uniform k-grid from `from` to `to` in `steps` intervals.
inline std::vector<double> k_grid(double from, double to, std::size_t steps) {
  std::vector<double> grid;
  for (std::size_t i = 0; i <= steps; ++i) {
    grid.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(steps));
  }
  return grid;
}

/// Pearson correlation of two equally long series.
inline double correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ParameterError("correlation: need two series of equal length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace mq
