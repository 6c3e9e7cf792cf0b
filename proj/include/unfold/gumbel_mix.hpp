#ifndef UNFOLD_GUMBEL_MIX_HPP
#define UNFOLD_GUMBEL_MIX_HPP

// Gaussian-mixture approximation g_K of the standard Gumbel density, fitted by
// minimizing KL(g || g_K) on a fixed quadrature grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "unfold/distributions.hpp"
#include "unfold/rng.hpp"
#include "unfold/text.hpp"

namespace unfold {

struct GaussianMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sds;

  std::size_t size() const { return weights.size(); }

  double log_density(double x) const {
    double top = -kInf;
    double terms[64];
    const std::size_t k_max = std::min<std::size_t>(size(), 64);
    for (std::size_t k = 0; k < k_max; ++k) {
      terms[k] = std::log(weights[k]) + normal_log_density(x, means[k], sds[k]);
      top = std::max(top, terms[k]);
    }
    if (top == -kInf) return -kInf;
    double total = 0.0;
    for (std::size_t k = 0; k < k_max; ++k) total += std::exp(terms[k] - top);
    return top + std::log(total);
  }

  double density(double x) const { return std::exp(log_density(x)); }

  double weight_sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

  bool operator==(const GaussianMixture&) const = default;
};

/// Throws std::invalid_argument unless weights are a probability vector
/// (within weight_tolerance) and every sd is positive.
inline void validate_mixture(const GaussianMixture& mix, double weight_tolerance = 1e-12) {
  const std::size_t K = mix.size();
  if (K == 0) throw std::invalid_argument("mixture has no components");
  if (K > 64) throw std::invalid_argument("mixture has more than 64 components");
  if (mix.means.size() != K || mix.sds.size() != K)
    throw std::invalid_argument("mixture arrays have different lengths");
  for (std::size_t k = 0; k < K; ++k) {
    if (!(mix.weights[k] >= 0.0) || !std::isfinite(mix.weights[k]))
      throw std::invalid_argument("mixture weight must be non-negative");
    if (!(mix.sds[k] > 0.0) || !std::isfinite(mix.sds[k]))
      throw std::invalid_argument("mixture sd must be positive");
    if (!std::isfinite(mix.means[k])) throw std::invalid_argument("mixture mean must be finite");
  }
  if (std::abs(mix.weight_sum() - 1.0) > weight_tolerance)
    throw std::invalid_argument("mixture weights do not sum to one");
}

/// Components sorted by descending weight (ties by mean, then sd).
inline GaussianMixture canonicalize(const GaussianMixture& mix) {
  std::vector<std::size_t> order(mix.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mix.weights[a] != mix.weights[b]) return mix.weights[a] > mix.weights[b];
    if (mix.means[a] != mix.means[b]) return mix.means[a] < mix.means[b];
    return mix.sds[a] < mix.sds[b];
  });
  GaussianMixture out;
  for (std::size_t k : order) {
    out.weights.push_back(mix.weights[k]);
    out.means.push_back(mix.means[k]);
    out.sds.push_back(mix.sds[k]);
  }
  return out;
}

inline GaussianMixture normalized(GaussianMixture mix) {
  const double total = mix.weight_sum();
  for (double& w : mix.weights) w /= total;
  return mix;
}

/// Published 6- and 10-component approximations, constants as printed
/// (3 decimals; the 10-component weights sum to 0.998).
inline GaussianMixture builtin_table(int K) {
  if (K == 6) {
    return {{0.365, 0.279, 0.160, 0.123, 0.061, 0.012},
            {0.455, -0.354, 1.497, 2.275, -1.016, 4.270},
            {0.649, 0.516, 0.768, 1.297, 0.397, 1.948}};
  }
  if (K == 10) {
    return {{0.307, 0.156, 0.123, 0.116, 0.090, 0.073, 0.058, 0.035, 0.024, 0.016},
            {-0.117, 2.062, 1.310, -0.896, 0.679, 0.885, -0.243, 0.551, 1.565, 4.087},
            {0.529, 1.265, 0.733, 0.427, 0.448, 0.678, 0.456, 0.603, 0.693, 1.914}};
  }
  throw std::invalid_argument("builtin_table: only K = 6 and K = 10 are tabulated");
}

/// Single N(0, 1) component: turns the sampler into the probit unfolding model.
inline GaussianMixture standard_normal_mixture() { return {{1.0}, {0.0}, {1.0}}; }

struct QuadratureGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = 0.0;
  double hi = 0.0;
};

/// Composite 8-point Gauss-Legendre rule with `panels` equal panels on [lo, hi].
inline QuadratureGrid gumbel_grid(std::size_t panels = 200, double lo = -10.0, double hi = 40.0) {
  if (panels == 0 || !(lo < hi)) throw std::invalid_argument("gumbel_grid: bad range");
  using Rule = boost::math::quadrature::gauss<double, 8>;
  const auto& abscissa = Rule::abscissa();
  const auto& rule_weights = Rule::weights();
  QuadratureGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  const double width = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double centre = lo + (static_cast<double>(p) + 0.5) * width;
    const double half = 0.5 * width;
    // abscissa() holds the non-negative half of the symmetric rule
    std::vector<std::pair<double, double>> panel;
    for (std::size_t q = 0; q < abscissa.size(); ++q) {
      panel.emplace_back(centre + half * abscissa[q], half * rule_weights[q]);
      if (abscissa[q] != 0.0) panel.emplace_back(centre - half * abscissa[q], half * rule_weights[q]);
    }
    std::sort(panel.begin(), panel.end());
    for (const auto& [x, w] : panel) {
      grid.nodes.push_back(x);
      grid.weights.push_back(w);
    }
  }
  return grid;
}

namespace detail {

// Quadrature-weighted Gumbel mass c_n = w_n g(x_n) and the constant sum c_n log g(x_n).
struct KlTarget {
  std::vector<double> x;
  std::vector<double> mass;
  double neg_entropy = 0.0;

  explicit KlTarget(const QuadratureGrid& grid) {
    for (std::size_t n = 0; n < grid.nodes.size(); ++n) {
      const double log_g = gumbel_log_density(grid.nodes[n]);
      const double g = std::exp(log_g);
      if (g <= 0.0) continue;
      x.push_back(grid.nodes[n]);
      mass.push_back(grid.weights[n] * g);
      neg_entropy += grid.weights[n] * g * log_g;
    }
  }
};

// Unconstrained parameters: [softmax logits | means | log sds].
inline GaussianMixture unpack(const std::vector<double>& theta, std::size_t K) {
  GaussianMixture mix;
  const double top = *std::max_element(theta.begin(), theta.begin() + K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) total += std::exp(theta[k] - top);
  for (std::size_t k = 0; k < K; ++k) {
    mix.weights.push_back(std::exp(theta[k] - top) / total);
    mix.means.push_back(theta[K + k]);
    mix.sds.push_back(std::exp(theta[2 * K + k]));
  }
  return mix;
}

inline std::vector<double> pack(const GaussianMixture& mix) {
  const std::size_t K = mix.size();
  std::vector<double> theta(3 * K);
  for (std::size_t k = 0; k < K; ++k) {
    theta[k] = std::log(std::max(mix.weights[k], 1e-300));
    theta[K + k] = mix.means[k];
    theta[2 * K + k] = std::log(mix.sds[k]);
  }
  return theta;
}

// KL and its gradient with respect to the unconstrained parameters.
inline double kl_objective(const KlTarget& target, const std::vector<double>& theta, std::size_t K,
                           std::vector<double>* gradient) {
  const GaussianMixture mix = unpack(theta, K);
  std::vector<double> log_w(K), inv_var(K), log_norm(K);
  for (std::size_t k = 0; k < K; ++k) {
    log_w[k] = std::log(mix.weights[k]);
    inv_var[k] = 1.0 / (mix.sds[k] * mix.sds[k]);
    log_norm[k] = -std::log(mix.sds[k]) - kLogSqrt2Pi;
  }
  if (gradient) gradient->assign(3 * K, 0.0);
  std::vector<double> terms(K);
  double cross = 0.0;
  for (std::size_t n = 0; n < target.x.size(); ++n) {
    const double x = target.x[n];
    double top = -kInf;
    for (std::size_t k = 0; k < K; ++k) {
      const double d = x - mix.means[k];
      terms[k] = log_w[k] + log_norm[k] - 0.5 * d * d * inv_var[k];
      top = std::max(top, terms[k]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += std::exp(terms[k] - top);
    const double log_gk = top + std::log(total);
    cross += target.mass[n] * log_gk;
    if (gradient) {
      const double c = target.mass[n];
      for (std::size_t k = 0; k < K; ++k) {
        const double r = std::exp(terms[k] - log_gk);
        const double d = x - mix.means[k];
        (*gradient)[k] -= c * (r - mix.weights[k]);
        (*gradient)[K + k] -= c * r * d * inv_var[k];
        (*gradient)[2 * K + k] -= c * r * (d * d * inv_var[k] - 1.0);
      }
    }
  }
  return target.neg_entropy - cross;
}

}  // namespace detail

/// KL(g || g_K) evaluated on the grid, with the weights renormalized to sum to
/// one. Returns +inf when g_K vanishes where g has mass; tiny negative
/// quadrature noise is clipped to zero.
inline double kl_divergence(const GaussianMixture& raw, const QuadratureGrid& grid) {
  validate_mixture(raw, 1e-2);
  const GaussianMixture mix = normalized(raw);
  const detail::KlTarget target(grid);
  double kl = target.neg_entropy;
  for (std::size_t n = 0; n < target.x.size(); ++n) {
    const double log_gk = mix.log_density(target.x[n]);
    if (log_gk == -kInf) return kInf;
    kl -= target.mass[n] * log_gk;
  }
  return std::max(kl, 0.0);
}

struct FitOptions {
  int max_iterations = 4000;
  double gradient_tolerance = 1e-10;
  int restarts = 5;
  std::uint64_t seed = 20230917;
};

struct FitResult {
  GaussianMixture mixture;
  double kl = kInf;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

struct BfgsOutcome {
  std::vector<double> theta;
  double value;
  bool converged;
  int iterations;
};

inline BfgsOutcome minimize_bfgs(const KlTarget& target, std::vector<double> theta, std::size_t K,
                                 const FitOptions& options) {
  const std::size_t n = theta.size();
  std::vector<double> grad;
  double value = kl_objective(target, theta, K, &grad);
  std::vector<double> inv_hessian(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv_hessian[i * n + i] = 1.0;
  bool scaled = false;
  int iter = 0;
  int stalls = 0;
  auto max_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };
  std::vector<double> direction(n), trial(n), trial_grad, s(n), y(n), hy(n);
  while (iter < options.max_iterations) {
    if (max_abs(grad) < options.gradient_tolerance) return {theta, value, true, iter};
    ++iter;
    for (std::size_t i = 0; i < n; ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < n; ++j) d -= inv_hessian[i * n + j] * grad[j];
      direction[i] = d;
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope += direction[i] * grad[i];
    if (!(slope < 0.0)) {
      // lost descent: restart from steepest descent
      std::fill(inv_hessian.begin(), inv_hessian.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        inv_hessian[i * n + i] = 1.0;
        direction[i] = -grad[i];
      }
      slope = 0.0;
      for (std::size_t i = 0; i < n; ++i) slope += direction[i] * grad[i];
      scaled = false;
    }
    double step = 1.0;
    double trial_value = kInf;
    bool accepted = false;
    for (int shrink = 0; shrink < 60; ++shrink) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = theta[i] + step * direction[i];
      trial_value = kl_objective(target, trial, K, &trial_grad);
      if (std::isfinite(trial_value) && trial_value <= value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return {theta, value, max_abs(grad) < 1e3 * options.gradient_tolerance, iter};
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial[i] - theta[i];
      y[i] = trial_grad[i] - grad[i];
    }
    const double improvement = value - trial_value;
    theta = trial;
    grad = trial_grad;
    value = trial_value;
    stalls = (improvement <= 1e-16 * std::max(1.0, std::abs(value))) ? stalls + 1 : 0;
    if (stalls >= 20) return {theta, value, max_abs(grad) < 1e3 * options.gradient_tolerance, iter};
    double sy = 0.0, yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sy += s[i] * y[i];
      yy += y[i] * y[i];
    }
    if (sy <= 1e-300) continue;
    if (!scaled) {
      std::fill(inv_hessian.begin(), inv_hessian.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) inv_hessian[i * n + i] = sy / yy;
      scaled = true;
    }
    double yhy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += inv_hessian[i * n + j] * y[j];
      hy[i] = v;
      yhy += y[i] * v;
    }
    const double rho = 1.0 / sy;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        inv_hessian[i * n + j] +=
            rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
  }
  return {theta, value, max_abs(grad) < options.gradient_tolerance, iter};
}

inline GaussianMixture split_heaviest(const GaussianMixture& mix, double offset_in_sds) {
  const auto heaviest = static_cast<std::size_t>(
      std::max_element(mix.weights.begin(), mix.weights.end()) - mix.weights.begin());
  GaussianMixture out = mix;
  const double half = 0.5 * mix.weights[heaviest];
  const double shift = offset_in_sds * mix.sds[heaviest];
  out.weights[heaviest] = half;
  out.means[heaviest] -= shift;
  out.weights.push_back(half);
  out.means.push_back(mix.means[heaviest] + shift);
  out.sds.push_back(mix.sds[heaviest]);
  return out;
}

// Equal weights, means at Gumbel quantiles.
inline GaussianMixture spread_start(std::size_t K) {
  GaussianMixture mix;
  for (std::size_t k = 0; k < K; ++k) {
    const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(K);
    mix.weights.push_back(1.0 / static_cast<double>(K));
    mix.means.push_back(K == 1 ? 0.0 : -std::log(-std::log(p)));
    mix.sds.push_back(K == 1 ? 1.0 : std::max(0.3, 1.28 / std::sqrt(static_cast<double>(K))));
  }
  return mix;
}

}  // namespace detail

/// Local minimizer of kl_divergence over K-component mixtures. With a
/// (K-1)-component init the heaviest component is split (clone, means at
/// +-0.5 sd, half weight each); further restarts perturb that start.
inline FitResult fit_mixture(std::size_t K, const std::optional<GaussianMixture>& init,
                             const QuadratureGrid& grid, const FitOptions& options = {}) {
  if (K == 0) throw std::invalid_argument("fit_mixture: K must be at least 1");
  std::vector<GaussianMixture> starts;
  if (init) {
    validate_mixture(*init, 1e-2);
    if (init->size() == K) {
      starts.push_back(normalized(*init));
    } else if (init->size() + 1 == K) {
      starts.push_back(detail::split_heaviest(normalized(*init), 0.5));
      starts.push_back(detail::split_heaviest(normalized(*init), 0.05));
    } else {
      throw std::invalid_argument("fit_mixture: init must have K or K-1 components");
    }
  } else {
    starts.push_back(detail::spread_start(K));
  }
  RngStream rng(options.seed, stream_id(0x6B6C, K, 0));
  const GaussianMixture base = starts.front();
  while (starts.size() < static_cast<std::size_t>(std::max(options.restarts, 1))) {
    GaussianMixture jittered = base;
    for (std::size_t k = 0; k < K; ++k) {
      jittered.weights[k] *= std::exp(0.3 * rng.normal());
      jittered.means[k] += 0.3 * jittered.sds[k] * rng.normal();
      jittered.sds[k] *= std::exp(0.2 * rng.normal());
    }
    starts.push_back(normalized(jittered));
  }

  const detail::KlTarget target(grid);
  FitResult best;
  for (const auto& start : starts) {
    const auto outcome = detail::minimize_bfgs(target, detail::pack(start), K, options);
    if (outcome.value < best.kl) {
      best.kl = outcome.value;
      best.mixture = detail::unpack(outcome.theta, K);
      best.converged = outcome.converged;
      best.iterations = outcome.iterations;
    }
  }
  best.mixture = canonicalize(best.mixture);
  best.kl = kl_divergence(best.mixture, grid);
  return best;
}

/// Warm-started fits for K = 1..k_max; element k-1 holds the K = k fit.
inline std::vector<FitResult> fit_mixture_path(std::size_t k_max, const QuadratureGrid& grid,
                                               const FitOptions& options = {}) {
  std::vector<FitResult> path;
  std::optional<GaussianMixture> previous;
  for (std::size_t K = 1; K <= k_max; ++K) {
    path.push_back(fit_mixture(K, previous, grid, options));
    previous = path.back().mixture;
  }
  return path;
}

inline std::string format_mixture(const GaussianMixture& mix) {
  std::string out = "# Gaussian mixture approximation to the standard Gumbel density\n";
  out += "K = " + std::to_string(mix.size()) + "\n";
  out += "pi = " + join_doubles(mix.weights) + "\n";
  out += "m = " + join_doubles(mix.means) + "\n";
  out += "s = " + join_doubles(mix.sds) + "\n";
  return out;
}

inline GaussianMixture parse_mixture(const KeyValueDoc& doc) {
  for (const auto& [key, value] : doc.entries())
    if (key != "K" && key != "pi" && key != "m" && key != "s")
      throw FormatError("mixture file: unknown key '" + key + "'");
  const auto K = parse_integer<std::size_t>(doc.at("K"));
  GaussianMixture mix{parse_double_list(doc.at("pi")), parse_double_list(doc.at("m")),
                      parse_double_list(doc.at("s"))};
  if (mix.size() != K || mix.means.size() != K || mix.sds.size() != K)
    throw FormatError("mixture file: K does not match the array lengths");
  validate_mixture(mix, 1e-2);
  return mix;
}

inline void write_mixture_file(const GaussianMixture& mix, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << format_mixture(mix);
}

inline GaussianMixture read_mixture_file(const std::string& path) {
  return parse_mixture(KeyValueDoc::read_file(path));
}

}  // namespace unfold

#endif  // UNFOLD_GUMBEL_MIX_HPP
