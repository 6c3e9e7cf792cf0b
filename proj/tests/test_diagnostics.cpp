#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unfold/diagnostics.hpp"

using namespace unfold;

namespace {

// Direct summation in long double: sum_i log(mean_s exp l) - sum_i var_s(l).
double waic_oracle(const std::vector<double>& ll, std::size_t n, std::size_t units) {
  long double total = 0.0L;
  for (std::size_t u = 0; u < units; ++u) {
    long double mean_exp = 0.0L, mean = 0.0L;
    for (std::size_t s = 0; s < n; ++s) {
      mean_exp += std::exp(static_cast<long double>(ll[s * units + u]));
      mean += ll[s * units + u];
    }
    mean_exp /= n;
    mean /= n;
    long double var = 0.0L;
    for (std::size_t s = 0; s < n; ++s) var += (ll[s * units + u] - mean) * (ll[s * units + u] - mean);
    var /= (n - 1);
    total += std::log(mean_exp) - var;
  }
  return static_cast<double>(total);
}

DrawStore store_from_beta(const std::vector<std::vector<double>>& rows) {
  DrawStore store(rows.front().size(), 1);
  ChainState state;
  state.items = {ItemParams{{1.0, -1.0}, {0.0, 1.0}, 1}};
  std::uint64_t it = 0;
  for (const auto& row : rows) {
    state.beta = row;
    std::vector<double> ll(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) ll[i] = -0.5 - 0.1 * row[i] * row[i];
    store.append(++it, state, ll);
  }
  return store;
}

}  // namespace

// ---- WAIC ----

TEST(Waic, MatchesDirectSummation) {
  RngStream rng(40, 0);
  const std::size_t n = 100, units = 3;
  std::vector<double> ll(n * units);
  for (double& v : ll) v = -std::abs(rng.normal(2.0, 1.5));
  const auto report = waic(ll, n, units);
  EXPECT_NEAR(report.waic, waic_oracle(ll, n, units), 1e-8);
  EXPECT_NEAR(report.waic, report.lppd - report.penalty, 1e-12);
  EXPECT_GE(report.penalty, 0.0);
  EXPECT_NEAR(std::accumulate(report.pointwise.begin(), report.pointwise.end(), 0.0), report.waic, 1e-12);
}

TEST(Waic, HandComputedTwoDraws) {
  // one unit, draws log(0.2) and log(0.6): lppd = log 0.4, var = (log 3)^2 / 2
  const std::vector<double> ll{std::log(0.2), std::log(0.6)};
  const auto report = waic(ll, 2, 1);
  EXPECT_NEAR(report.lppd, std::log(0.4), 1e-15);
  EXPECT_NEAR(report.penalty, 0.5 * std::log(3.0) * std::log(3.0), 1e-15);
}

TEST(Waic, RepeatedDrawHasNoPenalty) {
  const std::vector<double> ll{-1.0, -2.5, -0.3, -1.0, -2.5, -0.3};
  const auto report = waic(ll, 2, 3);
  EXPECT_EQ(report.penalty, 0.0);
  EXPECT_NEAR(report.waic, -3.8, 1e-14);
  const auto single = waic(std::vector<double>{-1.0, -2.5, -0.3}, 1, 3);
  EXPECT_EQ(single.penalty, 0.0);
  EXPECT_NEAR(single.waic, -3.8, 1e-14);
}

TEST(Waic, InvariantToDrawOrder) {
  RngStream rng(41, 0);
  const std::size_t n = 50, units = 4;
  std::vector<double> ll(n * units);
  for (double& v : ll) v = rng.normal(-3.0, 1.0);
  std::vector<double> shuffled(ll.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  std::swap(order[3], order[17]);
  for (std::size_t s = 0; s < n; ++s)
    std::copy_n(ll.begin() + order[s] * units, units, shuffled.begin() + s * units);
  const auto a = waic(ll, n, units);
  const auto b = waic(shuffled, n, units);
  EXPECT_NEAR(a.waic, b.waic, 1e-12);
  EXPECT_NEAR(a.penalty, b.penalty, 1e-12);
}

TEST(Waic, LargeMagnitudesStayFinite) {
  const std::vector<double> ll{-900.0, -901.0, -902.0};
  const auto report = waic(ll, 3, 1);
  EXPECT_TRUE(std::isfinite(report.lppd));
  EXPECT_NEAR(report.lppd, -900.0 + std::log((1 + std::exp(-1.0) + std::exp(-2.0)) / 3.0), 1e-12);
}

TEST(Waic, Errors) {
  EXPECT_THROW(waic(std::vector<double>{}, 0, 0), std::invalid_argument);
  EXPECT_THROW(waic(std::vector<double>{1.0, 2.0}, 1, 3), std::invalid_argument);
}

TEST(Waic, PerCellSumsToLegislatorTotalsWithOneDraw) {
  VoteMatrix votes(2, 3);
  votes.set(0, 0, Vote::Yea);
  votes.set(0, 2, Vote::Nay);
  votes.set(1, 1, Vote::Yea);
  votes.set(1, 2, Vote::Yea);
  ChainState state;
  state.beta = {-0.5, 0.8};
  state.items = {ItemParams{{1.0, -1.0}, {0.0, 1.0}, 1}, ItemParams{{-2.0, 0.5}, {1.0, -1.0}, -1},
                 ItemParams{{0.7, -0.3}, {-0.4, 2.0}, 1}};
  const ObsIndex obs(votes);
  DrawStore store(2, 3);
  store.append(1, state, legislator_log_likelihood(votes, obs, state.beta, state.items, Link::logit));
  const auto cell = waic_per_cell(store, votes, Link::logit);
  EXPECT_EQ(cell.pointwise.size(), 4u);
  EXPECT_NEAR(cell.waic, waic(store).waic, 1e-12);
  EXPECT_NEAR(cell.waic, log_likelihood(votes, state.beta, state.items), 1e-12);
  EXPECT_THROW(waic_per_cell(store, VoteMatrix(3, 3), Link::logit), std::invalid_argument);
}

// ---- Spearman ----

TEST(Spearman, FormulaValues) {
  const std::vector<int> a{1, 2, 3, 4}, b{1, 3, 2, 4}, rev{4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, a), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, rev), -1.0);
  EXPECT_DOUBLE_EQ(spearman(a, b), 0.8);
  EXPECT_DOUBLE_EQ(spearman(b, a), 0.8);
}

TEST(Spearman, SelfCorrelationIsOneForRandomPermutations) {
  RngStream rng(42, 0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(17);
    for (double& x : v) x = rng.normal();
    const auto r = rank_vector(v);
    ASSERT_TRUE(is_rank_permutation(r));
    EXPECT_DOUBLE_EQ(spearman(r, r), 1.0);
  }
}

TEST(Spearman, Errors) {
  const std::vector<int> a{1, 2, 3}, b{1, 2}, dup{1, 1, 3}, zero{0, 1, 2}, one{1};
  EXPECT_THROW(spearman(a, b), std::invalid_argument);
  EXPECT_THROW(spearman(a, dup), std::invalid_argument);
  EXPECT_THROW(spearman(zero, a), std::invalid_argument);
  EXPECT_THROW(spearman(one, one), std::invalid_argument);
}

// ---- ranks ----

TEST(Ranks, DirectSortAndTies) {
  EXPECT_EQ(rank_vector(std::vector<double>{0.3, -1.2, 2.0}), (std::vector<int>{2, 1, 3}));
  EXPECT_EQ(rank_vector(std::vector<double>{1.0, 0.0, 1.0, 0.0}), (std::vector<int>{3, 1, 4, 2}));
  const auto single = ranks(std::vector<double>{5.0, -3.0}, 2, 1);
  EXPECT_EQ(single.per_draw, (std::vector<int>{1, 1}));
  EXPECT_EQ(single.mean_rank, (std::vector<double>{1.0}));
}

TEST(Ranks, ReflectionReversesEveryDraw) {
  RngStream rng(43, 0);
  const std::size_t n = 20, I = 9;
  std::vector<double> beta(n * I), mirrored(n * I);
  for (std::size_t k = 0; k < beta.size(); ++k) {
    beta[k] = rng.normal();
    mirrored[k] = -beta[k];
  }
  const auto a = ranks(beta, n, I);
  const auto b = ranks(mirrored, n, I);
  for (std::size_t k = 0; k < a.per_draw.size(); ++k) EXPECT_EQ(b.per_draw[k], static_cast<int>(I) + 1 - a.per_draw[k]);
  for (std::size_t s = 0; s < n; ++s) EXPECT_TRUE(is_rank_permutation(a.draw(s)));
}

TEST(Ranks, InvariantToIncreasingTransforms) {
  RngStream rng(44, 0);
  const std::size_t n = 10, I = 7;
  std::vector<double> beta(n * I), transformed(n * I);
  for (std::size_t k = 0; k < beta.size(); ++k) {
    beta[k] = rng.normal();
    transformed[k] = std::exp(2.0 * beta[k]) + 3.0;
  }
  EXPECT_EQ(ranks(beta, n, I).per_draw, ranks(transformed, n, I).per_draw);
}

TEST(Ranks, MeanRankAndRankOfMean) {
  // legislator 0 is usually lowest but once far above: the two summaries differ
  const auto summary = ranks(std::vector<double>{0.0, 1.0, 2.0, 0.0, 1.0, 2.0, 10.0, 1.0, 2.0}, 3, 3);
  EXPECT_NEAR(summary.mean_rank[0], 5.0 / 3.0, 1e-15);
  EXPECT_EQ(summary.rank_of_mean, (std::vector<int>{3, 1, 2}));
}

// ---- ESS ----

TEST(Ess, IndependentSeries) {
  RngStream rng(45, 0);
  std::vector<double> x(10000);
  for (double& v : x) v = rng.normal();
  const auto e = ess(x);
  ASSERT_TRUE(e.has_value());
  EXPECT_NEAR(*e, 10000.0, 1000.0);
  EXPECT_LE(*e, 1.05 * 10000.0);
}

TEST(Ess, AutoregressiveSeries) {
  RngStream rng(46, 0);
  std::vector<double> x(100000);
  double prev = rng.normal() / std::sqrt(1 - 0.81);
  for (double& v : x) {
    prev = 0.9 * prev + rng.normal();
    v = prev;
  }
  const auto e = ess(x);
  ASSERT_TRUE(e.has_value());
  const double expected = 100000.0 * 0.1 / 1.9;
  EXPECT_NEAR(*e, expected, 0.1 * expected);
}

TEST(Ess, DegenerateSeries) {
  EXPECT_FALSE(ess(std::vector<double>(50, 1.5)).has_value());
  EXPECT_FALSE(ess(std::vector<double>{1, 2, 3}).has_value());
}

TEST(Quantile, TypeSeven) {
  EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.05), 1.15);
  EXPECT_DOUBLE_EQ(quantile({4.0, 1.0, 3.0, 2.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({7.0}, 0.95), 7.0);
  EXPECT_THROW(quantile({}, 0.5), std::invalid_argument);
}

// ---- response curves ----

TEST(ResponseCurve, SingleDrawCollapses) {
  DrawStore store(1, 1);
  ChainState state;
  state.beta = {0.0};
  state.items = {ItemParams{{1.5, -0.5}, {-1.0, 2.0}, 1}};
  store.append(1, state, {0.0});
  const std::vector<double> grid{-2.0, 0.0, 2.0};
  for (const auto& p : response_curve(store, 0, grid)) {
    EXPECT_EQ(p.lower, p.mean);
    EXPECT_EQ(p.upper, p.mean);
    EXPECT_DOUBLE_EQ(p.mean, response_probability(p.beta, state.items[0]));
  }
}

TEST(ResponseCurve, FlatAtOneThird) {
  DrawStore store(1, 1);
  ChainState state;
  state.beta = {0.0};
  for (int s = 0; s < 5; ++s) {
    state.items = {ItemParams{{0.0, 0.0}, {0.1 * s, -0.2 * s}, 1}};
    store.append(s + 1, state, {0.0});
  }
  const std::vector<double> grid{-3.0, 0.5, 4.0};
  for (const auto& p : response_curve(store, 0, grid)) {
    EXPECT_NEAR(p.mean, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.lower, 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(p.upper, 1.0 / 3.0, 1e-15);
  }
}

TEST(ResponseCurve, TwoDrawMeanIsAverage) {
  DrawStore store(1, 2);
  ChainState state;
  state.beta = {0.0};
  const ItemParams first{{2.0, -1.0}, {-0.5, 1.5}, 1};
  const ItemParams second{{-0.8, 3.0}, {0.7, -2.0}, -1};
  state.items = {first, first};
  store.append(1, state, {0.0});
  state.items = {first, second};
  store.append(2, state, {0.0});
  std::vector<double> grid;
  for (int g = 0; g <= 40; ++g) grid.push_back(-2.0 + 0.1 * g);
  const auto curve = response_curve(store, 1, grid);
  ASSERT_EQ(curve.size(), grid.size());
  for (const auto& p : curve) {
    const double a = response_probability(p.beta, first), b = response_probability(p.beta, second);
    EXPECT_NEAR(p.mean, 0.5 * (a + b), 1e-12);
    EXPECT_LE(p.lower, p.mean);
    EXPECT_GE(p.upper, p.mean);
  }
}

TEST(ResponseCurve, BandContainsMeanUnderSkew) {
  DrawStore store(1, 1);
  ChainState state;
  state.beta = {0.0};
  RngStream rng(47, 0);
  for (int s = 0; s < 200; ++s) {
    const double a = std::exp(rng.normal(0.0, 2.0));
    state.items = {ItemParams{{a, -0.01}, {rng.normal(0.0, 3.0), 50.0}, 1}};
    store.append(s + 1, state, {0.0});
  }
  std::vector<double> grid;
  for (int g = 0; g <= 60; ++g) grid.push_back(-3.0 + 0.1 * g);
  for (Link link : {Link::logit, Link::probit})
    for (const auto& p : response_curve(store, 0, grid, link)) {
      EXPECT_LE(p.lower, p.mean);
      EXPECT_LE(p.mean, p.upper);
      EXPECT_GT(p.lower, 0.0);
      EXPECT_LT(p.upper, 1.0);
    }
  EXPECT_THROW(response_curve(store, 1, grid), std::invalid_argument);
  EXPECT_THROW(response_curve(DrawStore(1, 1), 0, grid), std::invalid_argument);
}

// ---- comparison ----

TEST(Compare, SelfComparison) {
  const auto a = store_from_beta({{0.1, -0.4, 1.2, 0.5}, {0.0, -0.7, 1.0, 0.9}, {0.3, -0.1, 0.8, 0.2}});
  const auto report = compare_models(a, a);
  EXPECT_EQ(report.waic_difference, 0.0);
  EXPECT_EQ(report.rho_mean_ranks, 1.0);
  EXPECT_EQ(report.rho_mean, 1.0);
  EXPECT_EQ(report.rho_lower, 1.0);
  EXPECT_EQ(report.rho_upper, 1.0);
  EXPECT_FALSE(report.reflected);
}

TEST(Compare, ReflectedDraws) {
  const std::vector<std::vector<double>> rows{{0.1, -0.4, 1.2, 0.5}, {0.0, -0.7, 1.0, 0.9}, {0.3, -0.1, 0.8, 0.2}};
  std::vector<std::vector<double>> mirrored = rows;
  for (auto& row : mirrored)
    for (double& b : row) b = -b;
  const auto a = store_from_beta(rows);
  const auto b = store_from_beta(mirrored);
  const auto raw = compare_models(a, b);
  EXPECT_EQ(raw.rho_mean_ranks, -1.0);
  EXPECT_EQ(raw.rho_mean, -1.0);
  const auto aligned = compare_models(a, b, true);
  EXPECT_TRUE(aligned.reflected);
  EXPECT_EQ(aligned.rho_mean_ranks, 1.0);
  EXPECT_EQ(aligned.rho_mean, 1.0);
}

TEST(Compare, PairsDrawsByIndex) {
  const auto a = store_from_beta({{1, 2, 3, 4}, {1, 2, 3, 4}});
  const auto b = store_from_beta({{1, 3, 2, 4}, {4, 3, 2, 1}, {1, 2, 3, 4}});
  const auto report = compare_models(a, b);
  ASSERT_EQ(report.rho_draws.size(), 2u);
  EXPECT_DOUBLE_EQ(report.rho_draws[0], 0.8);
  EXPECT_DOUBLE_EQ(report.rho_draws[1], -1.0);
  EXPECT_DOUBLE_EQ(report.rho_mean, -0.1);
  EXPECT_NEAR(report.rho_lower, -1.0 + 0.05 * 1.8, 1e-15);
  EXPECT_NEAR(report.rho_upper, -1.0 + 0.95 * 1.8, 1e-15);
}

TEST(Compare, MismatchedRosters) {
  const auto a = store_from_beta({{1, 2, 3}});
  const auto b = store_from_beta({{1, 2, 3, 4}});
  EXPECT_THROW(compare_models(a, b), std::invalid_argument);
}
