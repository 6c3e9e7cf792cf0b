#ifndef UNFOLD_DIAGNOSTICS_HPP
#define UNFOLD_DIAGNOSTICS_HPP

// Posterior summaries: WAIC (legislator or cell as the pointwise unit),
// Spearman rank correlation, per-draw ranks, effective sample size and
// pointwise response-curve bands.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "unfold/distributions.hpp"
#include "unfold/model.hpp"
#include "unfold/sampler.hpp"

namespace unfold {

struct WaicReport {
  double lppd = 0.0;
  double penalty = 0.0;
  double waic = 0.0;
  std::vector<double> pointwise;  // lppd_u - var_u per unit
};

/// WAIC from an n x U row-major matrix of log-likelihood terms (draw by unit).
/// Larger is better: waic = sum_u log mean_s exp(l_us) - sum_u var_s(l_us).
/// The variance uses the n - 1 denominator and is 0 for a single draw.
inline WaicReport waic(std::span<const double> loglik, std::size_t n, std::size_t units) {
  if (n == 0) throw std::invalid_argument("waic: no draws");
  if (loglik.size() != n * units) throw std::invalid_argument("waic: matrix size does not match n x units");
  WaicReport report;
  report.pointwise.resize(units);
  std::vector<double> column(n);
  for (std::size_t u = 0; u < units; ++u) {
    for (std::size_t s = 0; s < n; ++s) column[s] = loglik[s * units + u];
    const double lppd = log_sum_exp(column) - std::log(static_cast<double>(n));
    double var = 0.0;
    if (n > 1) {
      double mean = 0.0;
      for (double v : column) mean += v;
      mean /= static_cast<double>(n);
      for (double v : column) var += (v - mean) * (v - mean);
      var /= static_cast<double>(n - 1);
    }
    report.lppd += lppd;
    report.penalty += var;
    report.pointwise[u] = lppd - var;
  }
  report.waic = report.lppd - report.penalty;
  return report;
}

/// WAIC with the legislator as the unit, from the stored per-legislator sums.
inline WaicReport waic(const DrawStore& draws) { return waic(draws.loglik_legislator, draws.size(), draws.I); }

/// WAIC with the observed cell as the unit; recomputes each term from the draws.
inline WaicReport waic_per_cell(const DrawStore& draws, const VoteMatrix& votes, Link link) {
  if (votes.legislators() != draws.I || votes.items() != draws.J)
    throw std::invalid_argument("waic_per_cell: draws and votes have different dimensions");
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < votes.legislators(); ++i)
    for (std::size_t j = 0; j < votes.items(); ++j)
      if (votes.observed(i, j)) cells.emplace_back(i, j);
  std::vector<double> terms(draws.size() * cells.size());
  for (std::size_t s = 0; s < draws.size(); ++s)
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto [i, j] = cells[c];
      terms[s * cells.size() + c] = cell_log_likelihood(votes.at(i, j), draws.beta_at(s, i), draws.item_at(s, j), link);
    }
  return waic(terms, draws.size(), cells.size());
}

/// True when `ranks` is a permutation of 1..n.
inline bool is_rank_permutation(std::span<const int> ranks) {
  std::vector<char> seen(ranks.size() + 1, 0);
  for (int r : ranks) {
    if (r < 1 || static_cast<std::size_t>(r) > ranks.size() || seen[r]) return false;
    seen[r] = 1;
  }
  return true;
}

/// 1 - 6 sum d^2 / (n (n^2 - 1)) for two rank permutations.
inline double spearman(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: rank vectors differ in length");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least two ranks");
  if (!is_rank_permutation(a) || !is_rank_permutation(b))
    throw std::invalid_argument("spearman: input is not a permutation of 1..n");
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

/// Ascending ranks 1..n; ties go to the lower index first.
inline std::vector<int> rank_vector(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<int> ranks(values.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<int>(r + 1);
  return ranks;
}

struct RankSummary {
  std::size_t n = 0;
  std::size_t I = 0;
  std::vector<int> per_draw;       // n x I
  std::vector<double> mean_rank;   // mean over draws of the per-draw rank
  std::vector<int> rank_of_mean;   // rank of the posterior mean of beta

  std::span<const int> draw(std::size_t s) const { return {per_draw.data() + s * I, I}; }
};

inline RankSummary ranks(std::span<const double> beta, std::size_t n, std::size_t I) {
  if (n == 0) throw std::invalid_argument("ranks: no draws");
  if (beta.size() != n * I) throw std::invalid_argument("ranks: matrix size does not match n x I");
  RankSummary out;
  out.n = n;
  out.I = I;
  out.per_draw.reserve(n * I);
  out.mean_rank.assign(I, 0.0);
  std::vector<double> mean_beta(I, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = rank_vector(beta.subspan(s * I, I));
    out.per_draw.insert(out.per_draw.end(), row.begin(), row.end());
    for (std::size_t i = 0; i < I; ++i) {
      out.mean_rank[i] += row[i];
      mean_beta[i] += beta[s * I + i];
    }
  }
  for (auto& r : out.mean_rank) r /= static_cast<double>(n);
  out.rank_of_mean = rank_vector(mean_beta);
  return out;
}

inline RankSummary ranks(const DrawStore& draws) { return ranks(draws.beta, draws.size(), draws.I); }

/// Effective sample size n / (1 + 2 sum rho_t), truncating the autocorrelation
/// sum with Geyer's initial monotone positive sequence. Returns nothing for a
/// constant series or one shorter than 10 values.
inline std::optional<double> ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 10) return std::nullopt;
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  double gamma0 = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    centered[t] = series[t] - mean;
    gamma0 += centered[t] * centered[t];
  }
  if (!(gamma0 > 0.0)) return std::nullopt;
  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += centered[t] * centered[t + lag];
    return acc / gamma0;
  };
  double tau = -1.0;
  double previous = kInf;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, previous);
    previous = pair;
    tau += 2.0 * pair;
  }
  if (!(tau > 0.0)) tau = 1.0 / static_cast<double>(n);
  return static_cast<double>(n) / tau;
}

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct CurvePoint {
  double beta;
  double mean;
  double lower;
  double upper;
};

/// Posterior mean of the response function of item j along a beta grid with a
/// central 90% pointwise band. The band is widened to contain the mean when a
/// skewed posterior would otherwise place the mean outside the quantiles.
inline std::vector<CurvePoint> response_curve(const DrawStore& draws, std::size_t j, std::span<const double> grid,
                                              Link link = Link::logit, double level = 0.90) {
  if (draws.empty()) throw std::invalid_argument("response_curve: no draws");
  if (j >= draws.J) throw std::invalid_argument("response_curve: item index out of range");
  std::vector<CurvePoint> curve;
  std::vector<double> theta(draws.size());
  const double tail = 0.5 * (1.0 - level);
  for (double b : grid) {
    double mean = 0.0;
    for (std::size_t s = 0; s < draws.size(); ++s) {
      theta[s] = response_probability(b, draws.item_at(s, j), link);
      mean += theta[s];
    }
    mean /= static_cast<double>(draws.size());
    const double lower = draws.size() == 1 ? theta[0] : quantile(theta, tail);
    const double upper = draws.size() == 1 ? theta[0] : quantile(theta, 1.0 - tail);
    curve.push_back({b, draws.size() == 1 ? theta[0] : mean, std::min(lower, mean), std::max(upper, mean)});
  }
  return curve;
}

struct ComparisonReport {
  WaicReport waic_a;
  WaicReport waic_b;
  double waic_difference = 0.0;      // WAIC(a) - WAIC(b)
  double rho_mean_ranks = 0.0;       // Spearman between the posterior mean rankings
  std::vector<double> rho_draws;     // per-draw Spearman, draws paired by index
  double rho_mean = 0.0;
  double rho_lower = 0.0;            // central 90% interval of rho_draws
  double rho_upper = 0.0;
  bool reflected = false;            // b's ranks were reversed before comparison
};

/// Table-3 style comparison of two fits to the same votes. With
/// align_reflection, b's rankings are reversed when the posterior mean
/// rankings correlate negatively (the two chains settled in mirrored modes).
inline ComparisonReport compare_models(const DrawStore& a, const DrawStore& b, bool align_reflection = false) {
  if (a.I != b.I) throw std::invalid_argument("compare_models: the two fits have different legislator counts");
  if (a.empty() || b.empty()) throw std::invalid_argument("compare_models: no draws");
  if (a.I < 2) throw std::invalid_argument("compare_models: need at least two legislators");
  ComparisonReport report;
  report.waic_a = waic(a);
  report.waic_b = waic(b);
  report.waic_difference = report.waic_a.waic - report.waic_b.waic;
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const auto mean_a = rank_vector(ra.mean_rank);
  auto mean_b = rank_vector(rb.mean_rank);
  report.rho_mean_ranks = spearman(mean_a, mean_b);
  const int top = static_cast<int>(a.I) + 1;
  if (align_reflection && report.rho_mean_ranks < 0.0) {
    report.reflected = true;
    report.rho_mean_ranks = -report.rho_mean_ranks;
  }
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<int> row_b(a.I);
  for (std::size_t s = 0; s < n; ++s) {
    const auto db = rb.draw(s);
    for (std::size_t i = 0; i < a.I; ++i) row_b[i] = report.reflected ? top - db[i] : db[i];
    report.rho_draws.push_back(spearman(ra.draw(s), row_b));
  }
  report.rho_mean = std::accumulate(report.rho_draws.begin(), report.rho_draws.end(), 0.0) / static_cast<double>(n);
  report.rho_lower = quantile(report.rho_draws, 0.05);
  report.rho_upper = quantile(report.rho_draws, 0.95);
  return report;
}

}  // namespace unfold

#endif  // UNFOLD_DIAGNOSTICS_HPP
