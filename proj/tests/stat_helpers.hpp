#ifndef UNFOLD_TESTS_STAT_HELPERS_HPP
#define UNFOLD_TESTS_STAT_HELPERS_HPP

// Goodness-of-fit helpers for the Monte Carlo tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testing_stats {

// Kolmogorov limiting survival function Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 ? 1.0 : -1.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// Two-sample KS p-value with Stephens' small-sample correction.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

// One-sample KS p-value against a continuous CDF.
inline double ks_one_sample(std::vector<double> a, const std::function<double(double)>& cdf) {
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double f = cdf(a[k]);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  const double ne = std::sqrt(n);
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

// Pearson chi-square p-value of observed counts against expected probabilities.
inline double chi_square_p(const std::vector<double>& counts, const std::vector<double>& probs) {
  double total = 0.0;
  for (double c : counts) total += c;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double expected = total * probs[k];
    if (expected <= 0.0) continue;
    stat += (counts[k] - expected) * (counts[k] - expected) / expected;
    ++cells;
  }
  if (cells < 2) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), stat));
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

}  // namespace testing_stats

#endif  // UNFOLD_TESTS_STAT_HELPERS_HPP
