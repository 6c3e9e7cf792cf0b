#ifndef UNFOLD_SAMPLER_HPP
#define UNFOLD_SAMPLER_HPP

// Data-augmented Gibbs sampler for the unfolding model. Shocks are Gaussian
// mixtures, so conditional on the component labels every utility is normal:
//
//   y*_1 = m_{l1} - alpha_1 (beta - delta_1) + N(0, s_{l1}^2)
//   y*_2 = m_{l2}                            + N(0, s_{l2}^2)
//   y*_3 = m_{l3} - alpha_2 (beta - delta_2) + N(0, s_{l3}^2)
//
// with Yea iff y*_2 is the largest. One iteration applies, in order: labels,
// utilities, ideal points, (z, alpha) with alpha integrated out for z, delta,
// and every flip_every-th iteration a Metropolis orthant flip per item.
//
// Every (kernel, iteration, entity) triple owns a counter-based random stream,
// so the chain does not depend on how loops are split across threads.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <omp.h>

#include "unfold/distributions.hpp"
#include "unfold/gumbel_mix.hpp"
#include "unfold/model.hpp"
#include "unfold/rng.hpp"

namespace unfold {

enum class InitMode { random, party_signed };

inline std::string to_string(InitMode mode) { return mode == InitMode::random ? "random" : "party-signed"; }

inline InitMode parse_init_mode(const std::string& text) {
  if (text == "random") return InitMode::random;
  if (text == "party-signed") return InitMode::party_signed;
  throw std::invalid_argument("unknown init_mode '" + text + "' (expected random or party-signed)");
}

struct SamplerConfig {
  GaussianMixture mixture = builtin_table(6);
  Link link = Link::logit;
  std::size_t burn_in = 5000;
  std::size_t n_keep = 2000;
  std::size_t thin = 5;
  std::size_t flip_every = 5;
  double flip_sign_prob = 0.1;
  std::uint64_t seed = 1;
  InitMode init_mode = InitMode::random;

  /// Desk-scale schedule: 5000 burn-in, 2000 draws thinned by 5.
  static SamplerConfig desk_scale() { return {}; }

  /// Schedule used for the published House fits: 500000 burn-in, 20000 draws thinned by 50.
  static SamplerConfig paper_scale() {
    SamplerConfig config;
    config.burn_in = 500000;
    config.n_keep = 20000;
    config.thin = 50;
    return config;
  }

  /// Probit unfolding model: the same kernels with a single N(0, 1) shock component.
  SamplerConfig as_probit() const {
    SamplerConfig config = *this;
    config.mixture = standard_normal_mixture();
    config.link = Link::probit;
    return config;
  }

  std::size_t total_iterations() const { return burn_in + n_keep * thin; }

  void validate() const {
    validate_mixture(mixture, 1e-2);
    if (mixture.size() > 255) throw std::invalid_argument("mixture has too many components");
    if (thin < 1) throw std::invalid_argument("thin must be at least 1");
    if (flip_every < 1) throw std::invalid_argument("flip_every must be at least 1");
    if (!(flip_sign_prob >= 0.0 && flip_sign_prob <= 1.0))
      throw std::invalid_argument("flip_sign_prob must lie in [0, 1]");
  }
};

/// Per-component constants of the (renormalized) shock mixture.
struct MixtureTables {
  std::size_t K = 0;
  std::vector<double> log_weight, mean, sd, var, inv_sd, log_sd;

  explicit MixtureTables(const GaussianMixture& raw) {
    const GaussianMixture mix = normalized(raw);
    K = mix.size();
    for (std::size_t k = 0; k < K; ++k) {
      log_weight.push_back(std::log(mix.weights[k]));
      mean.push_back(mix.means[k]);
      sd.push_back(mix.sds[k]);
      var.push_back(mix.sds[k] * mix.sds[k]);
      inv_sd.push_back(1.0 / mix.sds[k]);
      log_sd.push_back(std::log(mix.sds[k]));
    }
  }
};

/// Observed cells grouped by item and by legislator.
struct ObsIndex {
  std::vector<std::vector<std::uint32_t>> legislators_of_item;
  std::vector<std::vector<std::uint32_t>> items_of_legislator;

  explicit ObsIndex(const VoteMatrix& votes)
      : legislators_of_item(votes.items()), items_of_legislator(votes.legislators()) {
    for (std::size_t i = 0; i < votes.legislators(); ++i)
      for (std::size_t j = 0; j < votes.items(); ++j)
        if (votes.observed(i, j)) {
          legislators_of_item[j].push_back(static_cast<std::uint32_t>(i));
          items_of_legislator[i].push_back(static_cast<std::uint32_t>(j));
        }
  }
};

struct ChainState {
  IdealPoints beta;
  std::vector<ItemParams> items;
  LatentState latent;
  std::uint64_t iteration = 0;
};

/// Stream tags; one per kernel so that no two kernels share random numbers.
enum KernelTag : std::uint64_t {
  kTagLabels = 0x11,
  kTagUtilities = 0x12,
  kTagBeta = 0x13,
  kTagItem = 0x14,
  kTagDelta = 0x15,
  kTagFlip = 0x16,
  kTagFlipLabels = 0x17,
  kTagFlipUtilities = 0x18,
  kTagInit = 0x19,
  kTagInitCell = 0x1A,
};

inline RngStream kernel_stream(std::uint64_t seed, KernelTag tag, std::uint64_t iteration, std::uint64_t entity) {
  return RngStream(seed, stream_id(tag, iteration, entity));
}

namespace detail {

inline std::array<double, 3> utility_locations(double beta, const ItemParams& item) {
  return {-item.alpha[0] * (beta - item.delta[0]), 0.0, -item.alpha[1] * (beta - item.delta[1])};
}

template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t k = 0; k < n; ++k) body(k);
    return;
  }
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (std::int64_t k = 0; k < count; ++k) body(static_cast<std::size_t>(k));
}

}  // namespace detail

/// Normalized log weights of lambda for utility `which` (0, 1, 2) of one cell.
inline std::vector<double> label_log_weights(double ystar, int which, double beta, const ItemParams& item,
                                             const MixtureTables& mix) {
  const double loc = detail::utility_locations(beta, item)[which];
  std::vector<double> lw(mix.K);
  for (std::size_t k = 0; k < mix.K; ++k) {
    const double d = (ystar - mix.mean[k] - loc) * mix.inv_sd[k];
    lw[k] = mix.log_weight[k] - mix.log_sd[k] - 0.5 * d * d;
  }
  const double norm = log_sum_exp(lw);
  for (double& w : lw) w -= norm;
  return lw;
}

/// Step 1 for one cell: lambda_l ~ pi_k N(y*_l | m_k + location_l, s_k^2).
inline void update_cell_labels(const std::array<double, 3>& ystar, std::array<std::uint8_t, 3>& lambda,
                               double beta, const ItemParams& item, const MixtureTables& mix, RngStream& rng) {
  const auto loc = detail::utility_locations(beta, item);
  std::array<double, 256> lw;
  for (int l = 0; l < 3; ++l) {
    for (std::size_t k = 0; k < mix.K; ++k) {
      const double d = (ystar[l] - mix.mean[k] - loc[l]) * mix.inv_sd[k];
      lw[k] = mix.log_weight[k] - mix.log_sd[k] - 0.5 * d * d;
    }
    lambda[l] = static_cast<std::uint8_t>(sample_categorical_log(std::span<const double>(lw.data(), mix.K), rng));
  }
}

/// Step 2 for one cell: sequential truncated-normal updates of y*_1, y*_2, y*_3
/// keeping the utilities consistent with the observed vote.
inline void update_cell_utilities(Vote vote, std::array<double, 3>& y, const std::array<std::uint8_t, 3>& lambda,
                                  double beta, const ItemParams& item, const MixtureTables& mix, RngStream& rng) {
  const auto loc = detail::utility_locations(beta, item);
  double mu[3], sd[3];
  for (int l = 0; l < 3; ++l) {
    mu[l] = mix.mean[lambda[l]] + loc[l];
    sd[l] = mix.sd[lambda[l]];
  }
  if (vote == Vote::Yea) {
    y[0] = sample_truncated_normal(mu[0], sd[0], -kInf, y[1], rng);
    y[1] = sample_truncated_normal(mu[1], sd[1], std::max(y[0], y[2]), kInf, rng);
    y[2] = sample_truncated_normal(mu[2], sd[2], -kInf, y[1], rng);
  } else if (vote == Vote::Nay) {
    y[0] = (y[2] < y[1]) ? sample_truncated_normal(mu[0], sd[0], y[1], kInf, rng) : rng.normal(mu[0], sd[0]);
    y[1] = sample_truncated_normal(mu[1], sd[1], -kInf, std::max(y[0], y[2]), rng);
    y[2] = (y[0] < y[1]) ? sample_truncated_normal(mu[2], sd[2], y[1], kInf, rng) : rng.normal(mu[2], sd[2]);
  }
}

/// Vote-consistent starting utilities for one cell given its labels.
inline void initialize_cell_utilities(Vote vote, std::array<double, 3>& y, const std::array<std::uint8_t, 3>& lambda,
                                      double beta, const ItemParams& item, const MixtureTables& mix, RngStream& rng) {
  const auto loc = detail::utility_locations(beta, item);
  y[0] = rng.normal(mix.mean[lambda[0]] + loc[0], mix.sd[lambda[0]]);
  y[2] = rng.normal(mix.mean[lambda[2]] + loc[2], mix.sd[lambda[2]]);
  const double top = std::max(y[0], y[2]);
  const double mu = mix.mean[lambda[1]];
  if (vote == Vote::Yea) y[1] = sample_truncated_normal(mu, mix.sd[lambda[1]], top, kInf, rng);
  else if (vote == Vote::Nay) y[1] = sample_truncated_normal(mu, mix.sd[lambda[1]], -kInf, top, rng);
}

/// Step 1 over every observed cell.
inline void step_lambda(ChainState& state, const VoteMatrix& votes, const ObsIndex& obs, const MixtureTables& mix,
                        std::uint64_t seed, int threads = 1) {
  const std::size_t J = votes.items();
  detail::parallel_for(J, threads, [&](std::size_t j) {
    for (std::uint32_t i : obs.legislators_of_item[j]) {
      auto rng = kernel_stream(seed, kTagLabels, state.iteration, i * J + j);
      update_cell_labels(state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i], state.items[j], mix,
                         rng);
    }
  });
}

/// Step 2 over every observed cell.
inline void step_utilities(ChainState& state, const VoteMatrix& votes, const ObsIndex& obs, const MixtureTables& mix,
                           std::uint64_t seed, int threads = 1) {
  const std::size_t J = votes.items();
  detail::parallel_for(J, threads, [&](std::size_t j) {
    for (std::uint32_t i : obs.legislators_of_item[j]) {
      auto rng = kernel_stream(seed, kTagUtilities, state.iteration, i * J + j);
      update_cell_utilities(votes.at(i, j), state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i],
                            state.items[j], mix, rng);
    }
  });
}

struct GaussianConditional {
  double mean;
  double var;
};

/// Full conditional of beta_i given labels and utilities (N(0, 1) prior).
inline GaussianConditional beta_conditional(const ChainState& state, const ObsIndex& obs, std::size_t i,
                                            const MixtureTables& mix) {
  double precision = 1.0;
  double linear = 0.0;
  for (std::uint32_t j : obs.items_of_legislator[i]) {
    const auto& item = state.items[j];
    const auto& y = state.latent.utilities(i, j);
    const auto& lab = state.latent.labels(i, j);
    const double a1 = item.alpha[0], a2 = item.alpha[1];
    const double v1 = mix.var[lab[0]], v3 = mix.var[lab[2]];
    precision += a1 * a1 / v1 + a2 * a2 / v3;
    linear -= a1 * (y[0] - mix.mean[lab[0]] - a1 * item.delta[0]) / v1 +
              a2 * (y[2] - mix.mean[lab[2]] - a2 * item.delta[1]) / v3;
  }
  return {linear / precision, 1.0 / precision};
}

/// Step 3.
inline void step_beta(ChainState& state, const ObsIndex& obs, const MixtureTables& mix, std::uint64_t seed,
                      int threads = 1) {
  detail::parallel_for(state.beta.size(), threads, [&](std::size_t i) {
    const auto cond = beta_conditional(state, obs, i, mix);
    auto rng = kernel_stream(seed, kTagBeta, state.iteration, i);
    state.beta[i] = rng.normal(cond.mean, std::sqrt(cond.var));
  });
}

/// Gaussian full conditional of alpha_j before truncation (diagonal) and the
/// log weights of z_j = +1 / -1 with alpha_j integrated out.
struct AlphaConditional {
  std::array<double, 2> mean;
  std::array<double, 2> var;
  double log_weight_pos;
  double log_weight_neg;

  double prob_pos() const { return std::exp(log_weight_pos - log_sum_exp(log_weight_pos, log_weight_neg)); }
};

inline AlphaConditional alpha_conditional(const ChainState& state, const ObsIndex& obs, std::size_t j,
                                          const Hyperparams& hyper, const MixtureTables& mix) {
  const auto& item = state.items[j];
  double precision[2] = {1.0 / hyper.omega_sq, 1.0 / hyper.omega_sq};
  double linear[2] = {0.0, 0.0};
  for (std::uint32_t i : obs.legislators_of_item[j]) {
    const auto& y = state.latent.utilities(i, j);
    const auto& lab = state.latent.labels(i, j);
    const double d1 = state.beta[i] - item.delta[0];
    const double d2 = state.beta[i] - item.delta[1];
    const double v1 = mix.var[lab[0]], v3 = mix.var[lab[2]];
    precision[0] += d1 * d1 / v1;
    precision[1] += d2 * d2 / v3;
    linear[0] -= d1 * (y[0] - mix.mean[lab[0]]) / v1;
    linear[1] -= d2 * (y[2] - mix.mean[lab[2]]) / v3;
  }
  AlphaConditional cond;
  for (int k = 0; k < 2; ++k) {
    cond.var[k] = 1.0 / precision[k];
    cond.mean[k] = linear[k] * cond.var[k];
  }
  const double s1 = std::sqrt(cond.var[0]);
  const double s2 = std::sqrt(cond.var[1]);
  auto log_delta_prior = [&](int z) {
    const double e0 = item.delta[0] - z * hyper.vartheta[0];
    const double e1 = item.delta[1] - z * hyper.vartheta[1];
    return -0.5 * (e0 * e0 + e1 * e1) / hyper.kappa_sq;
  };
  // P(alpha1 > 0) P(alpha2 < 0) under N(mean, var), and the mirror orthant
  cond.log_weight_pos = log_delta_prior(1) + log_normal_cdf(cond.mean[0] / s1) + log_normal_cdf(-cond.mean[1] / s2);
  cond.log_weight_neg = log_delta_prior(-1) + log_normal_cdf(-cond.mean[0] / s1) + log_normal_cdf(cond.mean[1] / s2);
  return cond;
}

/// Step 4: z_j from its alpha-marginal conditional, then alpha_j from the
/// orthant-truncated Gaussian.
inline void update_item_orthant(ChainState& state, const ObsIndex& obs, std::size_t j, const Hyperparams& hyper,
                                const MixtureTables& mix, RngStream& rng) {
  const auto cond = alpha_conditional(state, obs, j, hyper, mix);
  const std::array<double, 2> lw{cond.log_weight_pos, cond.log_weight_neg};
  const int z = sample_categorical_log(lw, rng) == 0 ? 1 : -1;
  auto& item = state.items[j];
  item.z = z;
  const double s1 = std::sqrt(cond.var[0]);
  const double s2 = std::sqrt(cond.var[1]);
  if (z == 1) {
    item.alpha[0] = sample_truncated_normal(cond.mean[0], s1, 0.0, kInf, rng);
    item.alpha[1] = sample_truncated_normal(cond.mean[1], s2, -kInf, 0.0, rng);
  } else {
    item.alpha[0] = sample_truncated_normal(cond.mean[0], s1, -kInf, 0.0, rng);
    item.alpha[1] = sample_truncated_normal(cond.mean[1], s2, 0.0, kInf, rng);
  }
}

inline void step_item(ChainState& state, const ObsIndex& obs, const Hyperparams& hyper, const MixtureTables& mix,
                      std::uint64_t seed, int threads = 1) {
  detail::parallel_for(state.items.size(), threads, [&](std::size_t j) {
    auto rng = kernel_stream(seed, kTagItem, state.iteration, j);
    update_item_orthant(state, obs, j, hyper, mix, rng);
  });
}

/// Full conditional of delta_j (diagonal covariance).
inline std::array<GaussianConditional, 2> delta_conditional(const ChainState& state, const ObsIndex& obs,
                                                            std::size_t j, const Hyperparams& hyper,
                                                            const MixtureTables& mix) {
  const auto& item = state.items[j];
  double precision[2] = {1.0 / hyper.kappa_sq, 1.0 / hyper.kappa_sq};
  double linear[2] = {item.z * hyper.vartheta[0] / hyper.kappa_sq, item.z * hyper.vartheta[1] / hyper.kappa_sq};
  const double a1 = item.alpha[0], a2 = item.alpha[1];
  for (std::uint32_t i : obs.legislators_of_item[j]) {
    const auto& y = state.latent.utilities(i, j);
    const auto& lab = state.latent.labels(i, j);
    const double v1 = mix.var[lab[0]], v3 = mix.var[lab[2]];
    precision[0] += a1 * a1 / v1;
    precision[1] += a2 * a2 / v3;
    linear[0] += a1 * (y[0] + a1 * state.beta[i] - mix.mean[lab[0]]) / v1;
    linear[1] += a2 * (y[2] + a2 * state.beta[i] - mix.mean[lab[2]]) / v3;
  }
  return {GaussianConditional{linear[0] / precision[0], 1.0 / precision[0]},
          GaussianConditional{linear[1] / precision[1], 1.0 / precision[1]}};
}

/// Step 5.
inline void step_delta(ChainState& state, const ObsIndex& obs, const Hyperparams& hyper, const MixtureTables& mix,
                       std::uint64_t seed, int threads = 1) {
  detail::parallel_for(state.items.size(), threads, [&](std::size_t j) {
    const auto cond = delta_conditional(state, obs, j, hyper, mix);
    auto rng = kernel_stream(seed, kTagDelta, state.iteration, j);
    state.items[j].delta[0] = rng.normal(cond[0].mean, std::sqrt(cond[0].var));
    state.items[j].delta[1] = rng.normal(cond[1].mean, std::sqrt(cond[1].var));
  });
}

/// log of the flip acceptance ratio: the exact Bernoulli likelihood ratio over
/// the observed votes on item j (the prior terms cancel for both proposals).
inline double flip_log_acceptance(const VoteMatrix& votes, const ObsIndex& obs, const IdealPoints& beta, std::size_t j,
                                  const ItemParams& current, const ItemParams& proposed, Link link) {
  double log_ratio = 0.0;
  for (std::uint32_t i : obs.legislators_of_item[j]) {
    const Vote v = votes.at(i, j);
    log_ratio += cell_log_likelihood(v, beta[i], proposed, link) - cell_log_likelihood(v, beta[i], current, link);
  }
  return log_ratio;
}

/// Orthant-switching proposal: with probability flip_sign_prob the joint sign
/// flip (z, alpha, delta) -> -(z, alpha, delta); otherwise a draw from the
/// prior restricted to the opposite orthant.
inline ItemParams propose_flip(const ItemParams& current, const Hyperparams& hyper, double flip_sign_prob,
                               RngStream& rng) {
  if (rng.uniform() < flip_sign_prob) return current.reflected();
  return sample_prior_item_given_z(-current.z, hyper, rng);
}

struct FlipStats {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

/// Step 6 for one item. On acceptance the labels and utilities of the item's
/// cells are refreshed before any other kernel reads them.
inline bool update_item_flip(ChainState& state, const VoteMatrix& votes, const ObsIndex& obs, std::size_t j,
                             const Hyperparams& hyper, const SamplerConfig& config, const MixtureTables& mix) {
  auto rng = kernel_stream(config.seed, kTagFlip, state.iteration, j);
  const ItemParams proposal = propose_flip(state.items[j], hyper, config.flip_sign_prob, rng);
  const double log_ratio = flip_log_acceptance(votes, obs, state.beta, j, state.items[j], proposal, config.link);
  if (!(std::log(rng.uniform()) < log_ratio)) return false;
  state.items[j] = proposal;
  const std::size_t J = votes.items();
  for (std::uint32_t i : obs.legislators_of_item[j]) {
    auto label_rng = kernel_stream(config.seed, kTagFlipLabels, state.iteration, i * J + j);
    update_cell_labels(state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i], state.items[j], mix,
                       label_rng);
    auto utility_rng = kernel_stream(config.seed, kTagFlipUtilities, state.iteration, i * J + j);
    update_cell_utilities(votes.at(i, j), state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i],
                          state.items[j], mix, utility_rng);
  }
  return true;
}

inline FlipStats step_flip(ChainState& state, const VoteMatrix& votes, const ObsIndex& obs, const Hyperparams& hyper,
                           const SamplerConfig& config, const MixtureTables& mix, int threads = 1) {
  std::vector<char> accepted(state.items.size(), 0);
  detail::parallel_for(state.items.size(), threads, [&](std::size_t j) {
    accepted[j] = update_item_flip(state, votes, obs, j, hyper, config, mix) ? 1 : 0;
  });
  FlipStats stats;
  stats.proposed = accepted.size();
  for (char a : accepted) stats.accepted += static_cast<std::size_t>(a);
  return stats;
}

/// One full sweep; advances state.iteration first so every kernel of the sweep
/// draws from streams keyed by the new iteration number.
inline FlipStats gibbs_iteration(ChainState& state, const VoteMatrix& votes, const ObsIndex& obs,
                                 const Hyperparams& hyper, const SamplerConfig& config, const MixtureTables& mix,
                                 int threads = 1) {
  ++state.iteration;
  const std::size_t J = votes.items();
  // steps 1 and 2 only touch their own cell, so they are fused per cell
  detail::parallel_for(J, threads, [&](std::size_t j) {
    for (std::uint32_t i : obs.legislators_of_item[j]) {
      auto label_rng = kernel_stream(config.seed, kTagLabels, state.iteration, i * J + j);
      update_cell_labels(state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i], state.items[j], mix,
                         label_rng);
      auto utility_rng = kernel_stream(config.seed, kTagUtilities, state.iteration, i * J + j);
      update_cell_utilities(votes.at(i, j), state.latent.utilities(i, j), state.latent.labels(i, j), state.beta[i],
                            state.items[j], mix, utility_rng);
    }
  });
  step_beta(state, obs, mix, config.seed, threads);
  // steps 4 and 5 for item j read only item j and the (now fixed) betas
  detail::parallel_for(state.items.size(), threads, [&](std::size_t j) {
    auto item_rng = kernel_stream(config.seed, kTagItem, state.iteration, j);
    update_item_orthant(state, obs, j, hyper, mix, item_rng);
    const auto cond = delta_conditional(state, obs, j, hyper, mix);
    auto delta_rng = kernel_stream(config.seed, kTagDelta, state.iteration, j);
    state.items[j].delta[0] = delta_rng.normal(cond[0].mean, std::sqrt(cond[0].var));
    state.items[j].delta[1] = delta_rng.normal(cond[1].mean, std::sqrt(cond[1].var));
  });
  if (state.iteration % config.flip_every == 0) return step_flip(state, votes, obs, hyper, config, mix, threads);
  return {};
}

/// Starting state: beta from N(0, 1) (or +-1 with jitter by party), items from
/// the prior, uniform labels and vote-consistent utilities.
inline ChainState init_state(const VoteMatrix& votes, const Hyperparams& hyper, const SamplerConfig& config,
                             int threads = 1) {
  const std::size_t I = votes.legislators();
  const std::size_t J = votes.items();
  const MixtureTables mix(config.mixture);
  const ObsIndex obs(votes);
  ChainState state;
  state.beta.resize(I);
  state.items.resize(J);
  state.latent = LatentState(I, J);

  std::vector<std::string> parties;
  if (config.init_mode == InitMode::party_signed) {
    for (const auto& leg : votes.roster) {
      if (leg.party.empty()) throw std::invalid_argument("party-signed initialization needs a party label for every legislator");
      if (std::find(parties.begin(), parties.end(), leg.party) == parties.end()) parties.push_back(leg.party);
    }
    if (parties.size() < 2) throw std::invalid_argument("party-signed initialization needs at least two parties");
    std::sort(parties.begin(), parties.end());
  }
  for (std::size_t i = 0; i < I; ++i) {
    auto rng = kernel_stream(config.seed, kTagInit, 0, i);
    if (config.init_mode == InitMode::random) {
      state.beta[i] = rng.normal();
    } else {
      const auto rank = std::find(parties.begin(), parties.end(), votes.roster[i].party) - parties.begin();
      const double sign = rank == 0 ? -1.0 : (rank == 1 ? 1.0 : 0.0);
      state.beta[i] = sign + 0.1 * rng.normal();
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    auto rng = kernel_stream(config.seed, kTagInit, 1, j);
    state.items[j] = sample_prior_item(hyper, rng);
  }
  detail::parallel_for(J, threads, [&](std::size_t j) {
    for (std::uint32_t i : obs.legislators_of_item[j]) {
      auto rng = kernel_stream(config.seed, kTagInitCell, 0, i * J + j);
      auto& lab = state.latent.labels(i, j);
      for (auto& l : lab) l = static_cast<std::uint8_t>(std::min<std::size_t>(mix.K - 1, static_cast<std::size_t>(rng.uniform() * mix.K)));
      auto& y = state.latent.utilities(i, j);
      initialize_cell_utilities(votes.at(i, j), y, lab, state.beta[i], state.items[j], mix, rng);
      update_cell_utilities(votes.at(i, j), y, lab, state.beta[i], state.items[j], mix, rng);
    }
  });
  return state;
}

/// Retained draws in iteration order. Matrices are row-major with one row per draw.
struct DrawStore {
  std::size_t I = 0;
  std::size_t J = 0;
  std::vector<std::uint64_t> iterations;
  std::vector<double> beta;               // n x I
  std::vector<double> alpha;              // n x J x 2
  std::vector<double> delta;              // n x J x 2
  std::vector<int> z;                     // n x J
  std::vector<double> loglik_total;       // n
  std::vector<double> loglik_legislator;  // n x I

  DrawStore() = default;
  DrawStore(std::size_t legislators, std::size_t items) : I(legislators), J(items) {}

  std::size_t size() const { return iterations.size(); }
  bool empty() const { return iterations.empty(); }

  double beta_at(std::size_t draw, std::size_t i) const { return beta[draw * I + i]; }
  ItemParams item_at(std::size_t draw, std::size_t j) const {
    const std::size_t o = (draw * J + j) * 2;
    return ItemParams{{alpha[o], alpha[o + 1]}, {delta[o], delta[o + 1]}, z[draw * J + j]};
  }
  double loglik_at(std::size_t draw, std::size_t i) const { return loglik_legislator[draw * I + i]; }

  void append(std::uint64_t iteration, const ChainState& state, const std::vector<double>& per_legislator) {
    iterations.push_back(iteration);
    beta.insert(beta.end(), state.beta.begin(), state.beta.end());
    for (const auto& item : state.items) {
      alpha.push_back(item.alpha[0]);
      alpha.push_back(item.alpha[1]);
      delta.push_back(item.delta[0]);
      delta.push_back(item.delta[1]);
      z.push_back(item.z);
    }
    double total = 0.0;
    for (double v : per_legislator) total += v;
    loglik_total.push_back(total);
    loglik_legislator.insert(loglik_legislator.end(), per_legislator.begin(), per_legislator.end());
  }

  /// Keeps the first n draws.
  void truncate(std::size_t n) {
    if (n >= size()) return;
    iterations.resize(n);
    beta.resize(n * I);
    alpha.resize(n * J * 2);
    delta.resize(n * J * 2);
    z.resize(n * J);
    loglik_total.resize(n);
    loglik_legislator.resize(n * I);
  }

  bool operator==(const DrawStore&) const = default;
};

/// Exact log-likelihood per legislator (sum over that legislator's observed votes).
inline std::vector<double> legislator_log_likelihood(const VoteMatrix& votes, const ObsIndex& obs,
                                                     const IdealPoints& beta, const std::vector<ItemParams>& items,
                                                     Link link, int threads = 1) {
  std::vector<double> out(votes.legislators(), 0.0);
  detail::parallel_for(votes.legislators(), threads, [&](std::size_t i) {
    double total = 0.0;
    for (std::uint32_t j : obs.items_of_legislator[i]) total += cell_log_likelihood(votes.at(i, j), beta[i], items[j], link);
    out[i] = total;
  });
  return out;
}

/// Receives retained draws as they are produced (e.g. a CSV writer).
class DrawSink {
 public:
  virtual ~DrawSink() = default;
  virtual void append(std::uint64_t iteration, const ChainState& state, const std::vector<double>& per_legislator) = 0;
  virtual void finish(bool complete) = 0;
};

struct Progress {
  std::uint64_t iteration;
  double log_likelihood;
  double seconds_per_1000;
  double flip_acceptance;
};

struct RunOptions {
  int threads = 1;
  const std::atomic<bool>* stop = nullptr;
  DrawSink* sink = nullptr;
  std::function<void(const Progress&)> progress;
  std::uint64_t progress_every = 1000;
  bool keep_in_memory = true;
};

struct RunResult {
  DrawStore draws;
  ChainState final_state;
  bool complete = true;
  std::size_t retained = 0;
};

/// Runs burn_in + n_keep * thin iterations and keeps every thin-th state after
/// burn-in. Deterministic given config.seed (and the initial state if supplied).
inline RunResult run_chain(const VoteMatrix& votes, const Hyperparams& hyper, const SamplerConfig& config,
                           const RunOptions& options = {}, std::optional<ChainState> initial = std::nullopt) {
  config.validate();
  hyper.validate();
  const MixtureTables mix(config.mixture);
  const ObsIndex obs(votes);
  RunResult result;
  result.draws = DrawStore(votes.legislators(), votes.items());
  if (config.n_keep == 0) {
    if (options.sink) options.sink->finish(true);
    return result;
  }
  ChainState state = initial ? std::move(*initial) : init_state(votes, hyper, config, options.threads);
  if (state.beta.size() != votes.legislators() || state.items.size() != votes.items())
    throw std::invalid_argument("run_chain: initial state does not match the vote matrix");
  const std::uint64_t start = state.iteration;
  const std::uint64_t total = config.total_iterations();
  auto clock_start = std::chrono::steady_clock::now();
  FlipStats window_flips;
  for (std::uint64_t step = 1; step <= total; ++step) {
    if (options.stop && options.stop->load()) {
      result.complete = false;
      break;
    }
    const FlipStats flips = gibbs_iteration(state, votes, obs, hyper, config, mix, options.threads);
    window_flips.proposed += flips.proposed;
    window_flips.accepted += flips.accepted;
    if (step > config.burn_in && (step - config.burn_in) % config.thin == 0) {
      const auto per_leg = legislator_log_likelihood(votes, obs, state.beta, state.items, config.link, options.threads);
      if (options.keep_in_memory) result.draws.append(state.iteration, state, per_leg);
      if (options.sink) options.sink->append(state.iteration, state, per_leg);
      ++result.retained;
    }
    if (options.progress && options.progress_every > 0 && step % options.progress_every == 0) {
      const auto now = std::chrono::steady_clock::now();
      const double seconds = std::chrono::duration<double>(now - clock_start).count();
      clock_start = now;
      const auto per_leg = legislator_log_likelihood(votes, obs, state.beta, state.items, config.link, options.threads);
      double ll = 0.0;
      for (double v : per_leg) ll += v;
      options.progress({start + step, ll, seconds * 1000.0 / static_cast<double>(options.progress_every),
                        window_flips.proposed ? static_cast<double>(window_flips.accepted) / window_flips.proposed : 0.0});
      window_flips = {};
    }
  }
  if (options.sink) options.sink->finish(result.complete);
  result.final_state = std::move(state);
  return result;
}

}  // namespace unfold

#endif  // UNFOLD_SAMPLER_HPP
