#pragma once

// Closed-form quantities of the deletion-only MultiQueue and of the
// exponential-jump process.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mq/choice.hpp"
#include "mq/errors.hpp"

namespace mq {

/// Stationary parameters for gap i = 1..n-1, stored at index i-1:
///   p[i-1]      success probability of the geometric gap, 1 - i/(n sigma_upto(i))
///   lambda[i-1] rate of the exponential gap, n sigma_upto(i) - i
struct StationaryParams {
  std::size_t n = 0;
  std::vector<double> p;
  std::vector<double> lambda;
};

inline void require_star(const ChoiceDistribution& sigma) {
  if (auto bad = sigma.first_star_violation()) {
    throw DivergenceError(
        *bad, "choice distribution violates sigma_upto(i) > i/n at i = " +
                  std::to_string(*bad) + "; the rank error diverges");
  }
}

inline StationaryParams stationary_params(const ChoiceDistribution& sigma) {
  require_star(sigma);
  StationaryParams params;
  params.n = sigma.n();
  const double n = static_cast<double>(sigma.n());
  for (std::size_t i = 1; i < sigma.n(); ++i) {
    const double lambda = sigma.slack(i);
    params.lambda.push_back(lambda);
    params.p.push_back(lambda / (n * sigma.sigma_upto(i)));
  }
  return params;
}

/// Long-run expected ranks E[r_1], ..., E[r_n] of the top elements.
inline std::vector<double> expected_ranks(const ChoiceDistribution& sigma) {
  const auto params = stationary_params(sigma);
  std::vector<double> ranks(sigma.n(), 1.0);
  for (std::size_t i = 1; i < sigma.n(); ++i) {
    ranks[i] = ranks[i - 1] + 1.0 / params.p[i - 1];
  }
  return ranks;
}

/// Long-run expected rank error:
///   sum_{i<n} sigma_upto(i)(1 - sigma_upto(i)) / (sigma_upto(i) - i/n).
inline double expected_rank_error(const ChoiceDistribution& sigma) {
  require_star(sigma);
  const double n = static_cast<double>(sigma.n());
  double sum = 0.0;
  for (std::size_t i = 1; i < sigma.n(); ++i) {
    const double s = sigma.sigma_upto(i);
    sum += n * s * (1.0 - s) / sigma.slack(i);
  }
  return sum;
}

inline double rank_error_c2_closed(std::size_t n) {
  if (n == 0) throw ParameterError("n must be >= 1");
  const double x = static_cast<double>(n);
  return 5.0 / 6.0 * x - 1.0 + 1.0 / (6.0 * x);
}

inline double rank_error_c1eps_closed(double eps, std::size_t n) {
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0, 1)");
  if (n == 0) throw ParameterError("n must be >= 1");
  const double x = static_cast<double>(n);
  return (1.0 / eps - eps / 6.0) * x - 1.0 / eps + eps / (6.0 * x);
}

namespace detail {

// g_c in the rearranged form, multiplied through by x^(floor(c)-1) so that it
// is finite on all of [0, 1]:
//   g_c(x) = 1 + x^(k-1) (1 - eps + eps x) / (sum_{j=0}^{k-2} x^j + eps x^(k-1))
inline double g_c_unchecked(const CParameter& c, double x) {
  const unsigned k = c.floor_c();
  const double eps = c.eps();
  double geometric = 0.0;
  double power = 1.0;
  for (unsigned j = 0; j + 1 < k; ++j) {
    geometric += power;
    power *= x;
  }
  // power == x^(k-1) here
  const double denominator = geometric + eps * power;
  return 1.0 + power * (1.0 - eps + eps * x) / denominator;
}

inline double f_c_unchecked(const CParameter& c, double x) {
  const double lead = std::pow(x, static_cast<double>(c.floor_c()) - 1.0) *
                      (1.0 - c.eps() + c.eps() * x);
  return lead * g_c_unchecked(c, x);
}

inline double simpson_step(const std::function<double(double)>& f, double a,
                           double fa, double b, double fb, double m, double fm,
                           double whole, double tolerance, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tolerance) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tolerance, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tolerance, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature to the given absolute tolerance.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tolerance, int max_depth = 50) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tolerance, max_depth);
}

inline double g_c(const CParameter& c, double x) {
  if (!(x > 0.0 && x <= 1.0)) throw ParameterError("g_c: x must lie in (0, 1]");
  return detail::g_c_unchecked(c, x);
}

/// f_c(x) = x^(floor(c)-1) (1 - eps + eps x) g_c(x); f_c(1) = c/(c-1).
inline double f_c(const CParameter& c, double x) {
  if (!(x > 0.0 && x <= 1.0)) throw ParameterError("f_c: x must lie in (0, 1]");
  return detail::f_c_unchecked(c, x);
}

/// Integral of f_c over [0, 1] (f_c(0) taken as its limit).
inline double integral_f_c(const CParameter& c) {
  return adaptive_simpson([&](double x) { return detail::f_c_unchecked(c, x); },
                          0.0, 1.0, 1e-10);
}

struct RankErrorBounds {
  double integral_lower = 0.0;
  double integral_upper = 0.0;
  std::optional<double> crude_lower;
  std::optional<double> crude_upper;
  double lower = 0.0;  // tightest valid pair
  double upper = 0.0;
};

/// n/ceil(c) - c/(c-1) <= E[E] <= n/(floor(c)-1); only defined for c >= 2.
inline std::pair<double, double> crude_rank_error_bounds(const CParameter& c,
                                                         std::size_t n) {
  if (c.value() < 2.0) throw ParameterError("crude bounds need c >= 2");
  const double x = static_cast<double>(n);
  const double tail = c.value() / (c.value() - 1.0);
  return {x / c.ceil_c() - tail, x / (c.floor_c() - 1.0)};
}

inline RankErrorBounds rank_error_bounds(const CParameter& c, std::size_t n) {
  if (n == 0) throw ParameterError("n must be >= 1");
  RankErrorBounds b;
  const double x = static_cast<double>(n);
  const double integral = integral_f_c(c);
  b.integral_lower = x * integral - c.value() / (c.value() - 1.0);
  b.integral_upper = x * integral;
  b.lower = b.integral_lower;
  b.upper = b.integral_upper;
  if (c.value() >= 2.0) {
    auto [lo, hi] = crude_rank_error_bounds(c, n);
    b.crude_lower = lo;
    b.crude_upper = hi;
    b.lower = std::max(b.lower, lo);
    b.upper = std::min(b.upper, hi);
  }
  return b;
}

struct ConcentrationQuantities {
  double mu = 0.0;      // E[r_n - 1] for c = 2
  double p_star = 0.0;  // 1/(n+1)
  double min_p = 0.0;   // min_i p_i computed from the stationary parameters
};

/// mu = n - 1 + n * H_{n-1} and the smallest gap success probability for the
/// best-of-2 scheme.
inline ConcentrationQuantities concentration_quantities(std::size_t n) {
  if (n < 2) throw ParameterError("concentration quantities need n >= 2");
  ConcentrationQuantities q;
  double harmonic = 0.0;
  for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double x = static_cast<double>(n);
  q.mu = x - 1.0 + x * harmonic;
  q.p_star = 1.0 / (x + 1.0);
  const auto params = stationary_params(best_of_c(CParameter(2.0), n));
  q.min_p = *std::min_element(params.p.begin(), params.p.end());
  return q;
}

/// Upper bound on Pr[X >= k mu] for a sum X of geometric variables.
inline double janson_tail(double k, double mu, double p_star) {
  if (!(k >= 1.0)) throw ParameterError("janson_tail: k must be >= 1");
  return std::exp(-p_star * mu * (k - 1.0 - std::log(k)));
}

inline double logistic_limit(double x) {
  if (!(x > 0.0 && x < 1.0)) throw ParameterError("logistic: x must lie in (0, 1)");
  return std::log(x / (1.0 - x));
}

/// ceil(x * n) with x*n computed in floating point; guards against
/// representation error pushing an exact product up by one.
inline std::size_t normalized_index(double x, std::size_t n) {
  const double v = x * static_cast<double>(n);
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(v));
}

/// Expected stationary offset E[t_{ceil(xn)} - t_{ceil(n/2)}] of the EJP,
///   sum over the gaps between the two tokens of 1/lambda_i,
/// with the sign flipped for tokens left of the middle.
inline double logistic_profile(const ChoiceDistribution& sigma, double x) {
  if (!(x > 0.0 && x < 1.0)) throw ParameterError("logistic: x must lie in (0, 1)");
  require_star(sigma);
  const std::size_t n = sigma.n();
  const std::size_t mid = std::max<std::size_t>(1, normalized_index(0.5, n));
  const std::size_t at = std::max<std::size_t>(1, normalized_index(x, n));
  double sum = 0.0;
  if (at >= mid) {
    for (std::size_t i = mid; i < at; ++i) sum += 1.0 / sigma.slack(i);
  } else {
    for (std::size_t i = at; i < mid; ++i) sum -= 1.0 / sigma.slack(i);
  }
  return sum;
}

inline double logistic_profile(std::size_t n, double x) {
  if (n < 2) throw ParameterError("logistic profile needs n >= 2");
  return logistic_profile(best_of_c(CParameter(2.0), n), x);
}

/// Expected ranks of the top elements right after a uniformly random
/// partition of 1, 2, ... into n queues (the i-th distinct queue is first
/// hit after a coupon-collector wait): 1 + sum_{j<i} n/(n-j).
inline std::vector<double> expected_initial_ranks(std::size_t n) {
  if (n == 0) throw ParameterError("n must be >= 1");
  std::vector<double> ranks(n, 1.0);
  for (std::size_t i = 1; i < n; ++i) {
    ranks[i] = ranks[i - 1] +
               static_cast<double>(n) / static_cast<double>(n - i);
  }
  return ranks;
}

struct RankErrorSummary {
  std::size_t n = 0;
  std::string scheme;
  std::optional<double> c;
  double exact_expectation = 0.0;
  std::optional<double> closed_form;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::optional<double> integral_value;
};

inline RankErrorSummary summarize(const ChoiceDistribution& sigma) {
  RankErrorSummary s;
  s.n = sigma.n();
  s.scheme = sigma.label();
  s.exact_expectation = expected_rank_error(sigma);
  return s;
}

inline RankErrorSummary summarize(const CParameter& c, std::size_t n) {
  RankErrorSummary s = summarize(best_of_c(c, n));
  s.c = c.value();
  if (c.value() == 2.0) {
    s.closed_form = rank_error_c2_closed(n);
  } else if (c.floor_c() == 1) {
    s.closed_form = rank_error_c1eps_closed(c.eps(), n);
  }
  const auto bounds = rank_error_bounds(c, n);
  s.lower_bound = bounds.lower;
  s.upper_bound = bounds.upper;
  s.integral_value = integral_f_c(c);
  return s;
}

struct CSweepRow {
  double c = 0.0;
  double integral = 0.0;
  double asymptote = 0.0;  // 1/(c-1)
};

inline std::vector<CSweepRow> c_sweep(double from, double to, double step) {
  if (!(from > 1.0) || !(to >= from) || !(step > 0.0)) {
    throw ParameterError("c sweep needs 1 < from <= to and step > 0");
  }
  std::vector<CSweepRow> rows;
  const auto count = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  for (std::size_t k = 0; k <= count; ++k) {
    const double c = from + static_cast<double>(k) * step;
    rows.push_back({c, integral_f_c(CParameter(c)), 1.0 / (c - 1.0)});
  }
  return rows;
}

}  // namespace mq
