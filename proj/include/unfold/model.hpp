#ifndef UNFOLD_MODEL_HPP
#define UNFOLD_MODEL_HPP

// Votes, item and legislator parameters, the unfolding response function and
// the orthant-mixture prior on item parameters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "unfold/distributions.hpp"
#include "unfold/rng.hpp"

namespace unfold {

enum class Vote : std::uint8_t { Nay = 0, Yea = 1, Missing = 2 };

struct Legislator {
  std::string id;
  std::string name;
  std::string party;
};

struct ItemInfo {
  std::string id;
  std::string description;
};

class VoteMatrix {
 public:
  VoteMatrix() = default;
  VoteMatrix(std::size_t legislators, std::size_t items)
      : I_(legislators), J_(items), cells_(legislators * items, Vote::Missing) {
    for (std::size_t i = 0; i < I_; ++i) roster.push_back({"L" + std::to_string(i + 1), "", ""});
    for (std::size_t j = 0; j < J_; ++j) item_info.push_back({"V" + std::to_string(j + 1), ""});
  }

  std::size_t legislators() const { return I_; }
  std::size_t items() const { return J_; }
  Vote at(std::size_t i, std::size_t j) const { return cells_[i * J_ + j]; }
  void set(std::size_t i, std::size_t j, Vote v) { cells_[i * J_ + j] = v; }
  bool observed(std::size_t i, std::size_t j) const { return at(i, j) != Vote::Missing; }

  std::size_t observed_count() const {
    std::size_t n = 0;
    for (Vote v : cells_) n += (v != Vote::Missing);
    return n;
  }

  bool operator==(const VoteMatrix& other) const {
    if (I_ != other.I_ || J_ != other.J_ || cells_ != other.cells_) return false;
    for (std::size_t i = 0; i < I_; ++i)
      if (roster[i].id != other.roster[i].id) return false;
    for (std::size_t j = 0; j < J_; ++j)
      if (item_info[j].id != other.item_info[j].id) return false;
    return true;
  }

  std::vector<Legislator> roster;
  std::vector<ItemInfo> item_info;

 private:
  std::size_t I_ = 0;
  std::size_t J_ = 0;
  std::vector<Vote> cells_;
};

/// Prior constants for item parameters: delta ~ N(z * vartheta, kappa_sq I),
/// alpha ~ N(0, omega_sq I) truncated to the orthant picked by z.
struct Hyperparams {
  std::array<double, 2> vartheta{-2.0, 10.0};
  double omega_sq = 25.0;
  double kappa_sq = 10.0;

  void validate() const {
    if (!(omega_sq > 0.0) || !std::isfinite(omega_sq)) throw std::invalid_argument("omega_sq must be positive");
    if (!(kappa_sq > 0.0) || !std::isfinite(kappa_sq)) throw std::invalid_argument("kappa_sq must be positive");
    if (!std::isfinite(vartheta[0]) || !std::isfinite(vartheta[1]))
      throw std::invalid_argument("vartheta must be finite");
  }
};

/// Orthant of alpha: +1 when alpha1 > 0 > alpha2, -1 when alpha1 < 0 < alpha2, 0 otherwise.
inline int orthant_of(const std::array<double, 2>& alpha) {
  if (alpha[0] > 0.0 && alpha[1] < 0.0) return 1;
  if (alpha[0] < 0.0 && alpha[1] > 0.0) return -1;
  return 0;
}

struct ItemParams {
  std::array<double, 2> alpha{};
  std::array<double, 2> delta{};
  int z = 1;

  /// Rejects (alpha, z) pairs that violate the orthant constraint.
  static ItemParams make(std::array<double, 2> alpha, std::array<double, 2> delta, int z) {
    if (z != 1 && z != -1) throw std::invalid_argument("ItemParams: z must be +1 or -1");
    if (orthant_of(alpha) != z) throw std::invalid_argument("ItemParams: alpha is not in the orthant of z");
    return ItemParams{alpha, delta, z};
  }

  bool consistent() const { return (z == 1 || z == -1) && orthant_of(alpha) == z; }

  ItemParams reflected() const { return ItemParams{{-alpha[0], -alpha[1]}, {-delta[0], -delta[1]}, -z}; }

  bool operator==(const ItemParams&) const = default;
};

using IdealPoints = std::vector<double>;

/// Augmentation variables per (legislator, item) cell, stored row-major I x J.
/// Entries of missing cells are left untouched by every kernel.
struct LatentState {
  std::size_t I = 0;
  std::size_t J = 0;
  std::vector<std::array<double, 3>> ystar;
  std::vector<std::array<std::uint8_t, 3>> lambda;

  LatentState() = default;
  LatentState(std::size_t legislators, std::size_t items)
      : I(legislators), J(items), ystar(legislators * items), lambda(legislators * items) {}

  std::array<double, 3>& utilities(std::size_t i, std::size_t j) { return ystar[i * J + j]; }
  const std::array<double, 3>& utilities(std::size_t i, std::size_t j) const { return ystar[i * J + j]; }
  std::array<std::uint8_t, 3>& labels(std::size_t i, std::size_t j) { return lambda[i * J + j]; }
  const std::array<std::uint8_t, 3>& labels(std::size_t i, std::size_t j) const { return lambda[i * J + j]; }
};

/// y* agrees with the vote: Yea iff the middle utility is the strict maximum.
inline bool vote_consistent(Vote vote, const std::array<double, 3>& y) {
  if (vote == Vote::Missing) return true;
  const bool yea = y[1] > std::max(y[0], y[2]);
  return (vote == Vote::Yea) == yea;
}

/// Shock distribution behind the exact response function.
enum class Link { logit, probit };

inline std::string to_string(Link link) { return link == Link::logit ? "logit" : "probit"; }

inline Link parse_link(const std::string& text) {
  if (text == "logit") return Link::logit;
  if (text == "probit") return Link::probit;
  throw std::invalid_argument("unknown model '" + text + "' (expected logit or probit)");
}

struct LogProbability {
  double yea;
  double nay;
};

namespace detail {

// Utility advantages of the Yea option over the two Nay options.
inline std::array<double, 2> advantages(double beta, const std::array<double, 2>& alpha,
                                        const std::array<double, 2>& delta) {
  return {alpha[0] * (beta - delta[0]), alpha[1] * (beta - delta[1])};
}

inline LogProbability logit_log_probability(double a1, double a3) {
  const double t1 = -a1;
  const double t3 = -a3;
  const double nay = log_sum_exp(t1, t3);
  const double all = log_sum_exp(0.0, nay);
  return {-all, nay - all};
}

// log of E_e[Phi(c1 + e) Phi(c3 + e)], e ~ N(0, 1). The log integrand is
// concave with curvature below -1, so mode +- 10 holds all but e^-50 of the
// mass; eight 30-point Gauss-Legendre panels resolve it to double precision.
inline double log_expected_phi_product(double c1, double c3) {
  auto mills = [](double x) { return std::exp(-0.5 * x * x - kLogSqrt2Pi - log_normal_cdf(x)); };
  double mode = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double r1 = mills(c1 + mode);
    const double r3 = mills(c3 + mode);
    const double grad = -mode + r1 + r3;
    const double curv = -1.0 - r1 * (c1 + mode + r1) - r3 * (c3 + mode + r3);
    const double step = grad / curv;
    mode -= step;
    if (std::abs(step) < 1e-12) break;
  }
  using Rule = boost::math::quadrature::gauss<double, 30>;
  auto log_integrand = [&](double e) {
    return -0.5 * e * e - kLogSqrt2Pi + log_normal_cdf(c1 + e) + log_normal_cdf(c3 + e);
  };
  const double peak = log_integrand(mode);
  constexpr int kPanels = 8;
  constexpr double kHalfWidth = 10.0;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double lo = mode - kHalfWidth + 2.0 * kHalfWidth * p / kPanels;
    const double hi = lo + 2.0 * kHalfWidth / kPanels;
    total += Rule::integrate([&](double e) { return std::exp(log_integrand(e) - peak); }, lo, hi);
  }
  return peak + std::log(total);
}

// P(X < h, Y < k) for a standard bivariate normal with correlation rho, via
// Owen's T function.
inline double bivariate_normal_cdf(double h, double k, double rho) {
  const double root = std::sqrt(1.0 - rho * rho);
  if (h == 0.0 && k == 0.0) return 0.25 + std::asin(rho) / (2.0 * std::numbers::pi);
  // T(0, a) = atan(a) / (2 pi); a_h is infinite when h = 0
  auto owen = [&](double x, double other) {
    if (x == 0.0) return std::copysign(0.25, other);
    return boost::math::owens_t(x, (other - rho * x) / (x * root));
  };
  const bool negative = h * k < 0.0 || (h * k == 0.0 && std::min(h, k) < 0.0);
  return 0.5 * (normal_cdf(h) + normal_cdf(k)) - owen(h, k) - owen(k, h) - (negative ? 0.5 : 0.0);
}

// Gaussian shocks: Yea iff e1 - e2 < a1 and e3 - e2 < a3, a bivariate normal
// orthant with variances 2 and correlation 1/2.
inline LogProbability probit_log_probability(double a1, double a3) {
  const double h = a1 / std::numbers::sqrt2;
  const double k = a3 / std::numbers::sqrt2;
  const double yea = bivariate_normal_cdf(h, k, 0.5);
  constexpr double kTail = 1e-8;
  if (yea > kTail && yea < 1.0 - kTail) return {std::log(yea), std::log1p(-yea)};
  if (yea <= kTail) {
    const double log_yea = log_expected_phi_product(a1, a3);
    return {log_yea, std::log1p(-std::exp(log_yea))};
  }
  // 1 - theta = Phi(-h) + Phi(-k) - P(both Nay utilities exceed the Yea one)
  const double log_either = log_sum_exp(log_normal_cdf(-h), log_normal_cdf(-k));
  const double log_both = log_expected_phi_product(-a1, -a3);
  const double log_nay = log_either + std::log1p(-std::exp(log_both - log_either));
  return {std::log1p(-std::exp(log_nay)), log_nay};
}

}  // namespace detail

namespace detail {

// exp(log P(Yea)), taken from the smaller of the two probabilities for
// precision and kept inside the open interval (0, 1) of doubles.
inline double probability_from_log(const LogProbability& lp) {
  const double theta = lp.nay < lp.yea ? -std::expm1(lp.nay) : std::exp(lp.yea);
  return std::clamp(theta, std::numeric_limits<double>::denorm_min(), 1.0 - 0x1p-53);
}

}  // namespace detail

/// theta = 1 / (1 + exp{-a1 (beta - d1)} + exp{-a2 (beta - d2)}), evaluated in log space.
inline double response_probability(double beta, const ItemParams& item) {
  const auto a = detail::advantages(beta, item.alpha, item.delta);
  return detail::probability_from_log(detail::logit_log_probability(a[0], a[1]));
}

/// (log P(Yea), log P(Nay)) under the chosen link.
inline LogProbability log_response(double beta, const std::array<double, 2>& alpha,
                                   const std::array<double, 2>& delta, Link link) {
  const auto a = detail::advantages(beta, alpha, delta);
  return link == Link::logit ? detail::logit_log_probability(a[0], a[1])
                             : detail::probit_log_probability(a[0], a[1]);
}

inline double response_probability(double beta, const ItemParams& item, Link link) {
  return detail::probability_from_log(log_response(beta, item.alpha, item.delta, link));
}

inline double cell_log_likelihood(Vote vote, double beta, const ItemParams& item, Link link) {
  if (vote == Vote::Missing) return 0.0;
  const auto lp = log_response(beta, item.alpha, item.delta, link);
  return vote == Vote::Yea ? lp.yea : lp.nay;
}

/// Bernoulli log-likelihood summed over observed cells; missing cells contribute 0.
inline double log_likelihood(const VoteMatrix& votes, const IdealPoints& beta,
                             const std::vector<ItemParams>& items, Link link = Link::logit) {
  if (beta.size() != votes.legislators() || items.size() != votes.items())
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < votes.legislators(); ++i)
    for (std::size_t j = 0; j < votes.items(); ++j)
      total += cell_log_likelihood(votes.at(i, j), beta[i], items[j], link);
  return total;
}

/// Log density of the two-orthant truncated Gaussian prior on (alpha, delta);
/// -inf outside both orthants.
inline double log_prior_item(const std::array<double, 2>& alpha, const std::array<double, 2>& delta,
                             const Hyperparams& hyper) {
  const int z = orthant_of(alpha);
  if (z == 0) return -kInf;
  const double a2 = alpha[0] * alpha[0] + alpha[1] * alpha[1];
  const double d0 = delta[0] - z * hyper.vartheta[0];
  const double d1 = delta[1] - z * hyper.vartheta[1];
  // each orthant component: 1 / (pi^2 omega^2 kappa^2), mixed with weight 1/2
  const double log_norm = -std::log(2.0 * std::numbers::pi * std::numbers::pi * hyper.omega_sq * hyper.kappa_sq);
  return log_norm - 0.5 * (a2 / hyper.omega_sq + (d0 * d0 + d1 * d1) / hyper.kappa_sq);
}

inline double log_prior_item(const ItemParams& item, const Hyperparams& hyper) {
  return log_prior_item(item.alpha, item.delta, hyper);
}

/// (alpha, delta) from the prior given the orthant z.
inline ItemParams sample_prior_item_given_z(int z, const Hyperparams& hyper, RngStream& rng) {
  const double omega = std::sqrt(hyper.omega_sq);
  const double kappa = std::sqrt(hyper.kappa_sq);
  ItemParams item;
  item.z = z;
  const double magnitude1 = std::abs(rng.normal()) * omega;
  const double magnitude2 = std::abs(rng.normal()) * omega;
  // |N(0,1)| is zero with probability 0, but keep alpha strictly inside the orthant
  item.alpha = {z * std::max(magnitude1, 1e-300), -z * std::max(magnitude2, 1e-300)};
  item.delta = {rng.normal(z * hyper.vartheta[0], kappa), rng.normal(z * hyper.vartheta[1], kappa)};
  return item;
}

inline ItemParams sample_prior_item(const Hyperparams& hyper, RngStream& rng) {
  const int z = rng.uniform() < 0.5 ? 1 : -1;
  return sample_prior_item_given_z(z, hyper, rng);
}

/// Implied prior on theta: beta ~ N(0, 1), (alpha, delta) from the item prior.
inline std::vector<double> sample_prior_theta(const Hyperparams& hyper, std::size_t count, RngStream& rng,
                                              Link link = Link::logit) {
  if (count == 0) throw std::invalid_argument("sample_prior_theta: count must be positive");
  hyper.validate();
  std::vector<double> theta;
  theta.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double beta = rng.normal();
    const ItemParams item = sample_prior_item(hyper, rng);
    theta.push_back(response_probability(beta, item, link));
  }
  return theta;
}

}  // namespace unfold

#endif  // UNFOLD_MODEL_HPP
