#ifndef UNFOLD_DISTRIBUTIONS_HPP
#define UNFOLD_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "unfold/rng.hpp"

namespace unfold {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

/// Log density of the standard Gumbel (maximum) distribution, -x - exp(-x).
inline double gumbel_log_density(double x) {
  if (!std::isfinite(x)) throw std::domain_error("gumbel_log_density: non-finite argument");
  return -x - std::exp(-x);
}

inline double normal_log_density(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kLogSqrt2Pi;
}

/// log Phi(x). Uses erfc on the bulk and the asymptotic Mills-ratio series
/// below x = -20, where erfc would eventually underflow.
inline double log_normal_cdf(double x) {
  if (std::isnan(x)) throw std::domain_error("log_normal_cdf: NaN argument");
  if (x == -kInf) return -kInf;
  if (x == kInf) return 0.0;
  if (x < -20.0) {
    const double inv_x2 = 1.0 / (x * x);
    double term = 1.0;
    double series = 1.0;
    for (int n = 1; n <= 12; ++n) {
      term *= -(2.0 * n - 1.0) * inv_x2;
      series += term;
    }
    return -0.5 * x * x - std::log(-x) - kLogSqrt2Pi + std::log(series);
  }
  if (x < 0.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
  return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Phi^{-1}(p) for p in (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

inline double log_sum_exp(std::span<const double> values) {
  double top = -kInf;
  for (double v : values) top = std::max(top, v);
  if (top == -kInf) return -kInf;
  if (top == kInf) return kInf;
  double total = 0.0;
  for (double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

inline double log_sum_exp(double a, double b) {
  const double top = std::max(a, b);
  if (top == -kInf) return -kInf;
  return top + std::log1p(std::exp(std::min(a, b) - top));
}

namespace detail {

inline constexpr double kTailCut = 4.0;

// Standard normal restricted to [a, b] with a >= kTailCut: truncated
// exponential proposal with rate (a + sqrt(a^2 + 4)) / 2 (Robert, 1995).
inline double tail_truncated_normal(double a, double b, RngStream& rng) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  const double span_mass = (b == kInf) ? 1.0 : -std::expm1(-rate * (b - a));
  for (;;) {
    const double x = a - std::log1p(-rng.uniform() * span_mass) / rate;
    const double d = x - rate;
    if (std::log(rng.uniform()) < -0.5 * d * d) return x;
  }
}

// Uniform proposal for short intervals inside the central region.
inline double narrow_truncated_normal(double a, double b, RngStream& rng) {
  const double mode = (a > 0.0) ? a : (b < 0.0 ? b : 0.0);
  for (;;) {
    const double x = a + (b - a) * rng.uniform();
    if (std::log(rng.uniform()) < -0.5 * (x * x - mode * mode)) return x;
  }
}

// Inversion, working in the left half so that Phi values keep relative precision.
inline double inverted_truncated_normal(double a, double b, RngStream& rng) {
  if (a > 0.0) return -inverted_truncated_normal(-b, -a, rng);
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  const double u = pa + (pb - pa) * rng.uniform();
  if (u <= 0.0) return a;
  if (u >= 1.0) return b;
  return normal_quantile(u);
}

inline double standard_truncated_normal(double a, double b, RngStream& rng) {
  if (a >= kTailCut) return tail_truncated_normal(a, b, rng);
  if (b <= -kTailCut) return -tail_truncated_normal(-b, -a, rng);
  if (b - a <= 0.25) return narrow_truncated_normal(a, b, rng);
  return inverted_truncated_normal(a, b, rng);
}

}  // namespace detail

/// Draw from N(mean, sd^2) restricted to the open interval (lower, upper).
inline double sample_truncated_normal(double mean, double sd, double lower, double upper,
                                      RngStream& rng) {
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw std::invalid_argument("sample_truncated_normal: sd must be positive and finite");
  if (!(lower < upper)) throw std::invalid_argument("sample_truncated_normal: empty interval");
  if (!std::isfinite(mean)) throw std::invalid_argument("sample_truncated_normal: non-finite mean");
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double x = mean + sd * detail::standard_truncated_normal(a, b, rng);
    if (x > lower && x < upper) return x;
  }
  // Interval narrower than the rounding of mean + sd * z.
  const double mid = std::isfinite(lower) && std::isfinite(upper) ? lower + 0.5 * (upper - lower)
                     : std::isfinite(lower)                        ? std::nextafter(lower, kInf)
                                                                   : std::nextafter(upper, -kInf);
  if (mid > lower && mid < upper) return mid;
  throw std::runtime_error("sample_truncated_normal: interval has no interior double");
}

/// Draw an index with probability proportional to exp(log_weights[k]).
inline std::size_t sample_categorical_log(std::span<const double> log_weights, RngStream& rng) {
  double top = -kInf;
  for (double w : log_weights) {
    if (std::isnan(w) || w == kInf) throw std::invalid_argument("sample_categorical_log: invalid weight");
    top = std::max(top, w);
  }
  if (top == -kInf) throw std::invalid_argument("sample_categorical_log: all weights are zero");
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - top);
  double target = rng.uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    const double mass = std::exp(log_weights[k] - top);
    if (mass <= 0.0) continue;
    last_positive = k;
    if (target < mass) return k;
    target -= mass;
  }
  return last_positive;
}

}  // namespace unfold

#endif  // UNFOLD_DISTRIBUTIONS_HPP
