// unfold: fit logit / probit unfolding models to roll-call votes.
//
//   unfold approx-gumbel --k 6 --out mix6.txt [--fit | --table]
//   unfold simulate --i 50 --j 200 --seed 7 --out sim/
//   unfold fit --votes sim/votes.csv --model logit --out fit_logit/
//   unfold diagnostics --draws fit_logit --votes sim/votes.csv --out diag/
//   unfold compare --draws-a fit_logit --draws-b fit_probit --votes sim/votes.csv --out cmp/
//   unfold prior-theta --n 100000 --out theta.csv
//
// Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "unfold/config.hpp"
#include "unfold/data_io.hpp"
#include "unfold/diagnostics.hpp"
#include "unfold/gumbel_mix.hpp"
#include "unfold/model.hpp"
#include "unfold/sampler.hpp"

namespace fs = std::filesystem;
using namespace unfold;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop.store(true); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

std::string dashed(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return key;
}

// ---------------------------------------------------------------------------

struct ApproxArgs {
  int k = 0;
  std::string out;
  bool fit = false;
  bool table = false;
  std::size_t restarts = 5;
  std::uint64_t seed = FitOptions{}.seed;
  std::size_t panels = 200;
  std::string kl_curve;
};

int cmd_approx_gumbel(const ApproxArgs& a) {
  if (a.fit && a.table) throw UsageError("--fit and --table are exclusive");
  if (a.k < 1) throw UsageError("--k must be at least 1");
  if (a.table && a.k != 6 && a.k != 10) throw UsageError("--table is available for k = 6 and k = 10 only");
  if (a.panels < 1) throw UsageError("--panels must be at least 1");
  const auto grid = gumbel_grid(a.panels);
  std::string header;
  GaussianMixture mix;
  double kl = 0.0;
  if (a.table) {
    mix = builtin_table(a.k);
    kl = kl_divergence(mix, grid);
    header = "# published table, K = " + std::to_string(a.k) + "\n";
  } else {
    FitOptions options;
    options.restarts = a.restarts;
    options.seed = a.seed;
    const auto path = fit_mixture_path(static_cast<std::size_t>(a.k), grid, options);
    const auto& best = path.back();
    mix = best.mixture;
    kl = best.kl;
    if (!std::isfinite(kl)) {
      std::cerr << "error: the optimizer did not produce a finite KL divergence\n";
      return 1;
    }
    if (!best.converged) std::cerr << "warning: optimizer stopped at the iteration budget; writing the best iterate\n";
    header = "# fit K = " + std::to_string(a.k) + ", restarts = " + std::to_string(a.restarts) +
             ", seed = " + std::to_string(a.seed) + ", panels = " + std::to_string(a.panels) +
             ", converged = " + (best.converged ? "true" : "false") + "\n";
    if (!a.kl_curve.empty()) {
      auto out = open_out(a.kl_curve);
      out << "K,kl,converged\n";
      for (std::size_t k = 0; k < path.size(); ++k)
        out << k + 1 << ',' << format_double(path[k].kl) << ',' << (path[k].converged ? 1 : 0) << '\n';
    }
  }
  header += "# kl = " + format_double(kl) + "\n";
  write_text(a.out, header + format_mixture(mix));
  std::cout << "K = " << mix.size() << "  KL = " << format_double(kl) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string config;
  std::map<std::string, std::string> overrides;
};

RunConfig resolve_config(const FitArgs& a) {
  RunConfig config;
  try {
    if (!a.config.empty()) config.apply(KeyValueDoc::read_file(a.config));
    KeyValueDoc flags;
    for (const auto& [key, value] : a.overrides)
      if (!value.empty()) flags.set(key, value);
    config.apply(flags);
    if (config.out.empty()) throw UsageError("--out is required");
    config.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return config;
}

class ProgressLog {
 public:
  explicit ProgressLog(const fs::path& path) : out_(open_out(path)) {
    out_ << "iteration,loglik,seconds_per_1000,flip_acceptance\n";
    out_.flush();
  }
  void operator()(const Progress& p) {
    out_ << p.iteration << ',' << format_double(p.log_likelihood) << ',' << format_double(p.seconds_per_1000) << ','
         << format_double(p.flip_acceptance) << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

int cmd_fit(const FitArgs& a) {
  const RunConfig config = resolve_config(a);
  LoadedVotes loaded;
  try {
    loaded = load_votes(config.votes, config.codes,
                        config.legislators.empty() ? std::nullopt : std::optional<std::string>(config.legislators));
  } catch (const FilterError& e) {
    std::cerr << "error: " << e.what() << "\n" << e.report().str();
    return 1;
  }
  const fs::path out(config.out);
  const fs::path draws = out / "draws";
  fs::create_directories(draws);
  write_text(out / "filter_report.txt", loaded.report.str());
  write_text(draws / "config.txt", config.echo().str());
  write_legislators_csv(loaded.votes, draws / "legislators.csv");
  write_items_csv(loaded.votes, draws / "items.csv");

  const SamplerConfig sampler = config.sampler();
  std::cerr << loaded.report.str() << "model " << to_string(sampler.link) << ", K = " << sampler.mixture.size()
            << ", " << sampler.total_iterations() << " iterations\n";

  DrawWriter writer(draws, loaded.votes.legislators(), loaded.votes.items());
  ProgressLog log(out / "progress.log");
  RunOptions options;
  options.threads = config.threads;
  options.stop = &g_stop;
  options.sink = &writer;
  options.keep_in_memory = false;
  options.progress = [&](const Progress& p) { log(p); };
  std::signal(SIGINT, on_interrupt);
  std::signal(SIGTERM, on_interrupt);
  const auto result = run_chain(loaded.votes, config.hyper, sampler, options);
  if (!result.complete) {
    std::cerr << "interrupted: " << result.retained << " draws written to " << draws.string() << "\n";
    return 1;
  }
  std::cout << result.retained << " draws written to " << draws.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

// Accepts either a draws directory or a fit output directory holding draws/.
fs::path draws_dir(const std::string& path) {
  const fs::path p(path);
  if (!fs::exists(p / "beta.csv") && fs::exists(p / "draws" / "beta.csv")) return p / "draws";
  return p;
}

struct FitRecord {
  fs::path dir;
  DrawArchive archive;
  RunConfig config;  // from the echo, when present
  std::vector<std::string> roster;
};

FitRecord open_fit(const std::string& path) {
  FitRecord fit;
  fit.dir = draws_dir(path);
  fit.archive = read_draws(fit.dir);
  if (fs::exists(fit.dir / "config.txt")) fit.config.apply(KeyValueDoc::read_file((fit.dir / "config.txt").string()));
  if (fs::exists(fit.dir / "legislators.csv")) fit.roster = read_roster_ids(fit.dir / "legislators.csv");
  if (!fit.roster.empty() && fit.roster.size() != fit.archive.draws.I)
    throw FormatError(fit.dir.string() + ": legislators.csv lists " + std::to_string(fit.roster.size()) +
                      " legislators but the draws have " + std::to_string(fit.archive.draws.I));
  if (fit.archive.truncated)
    std::cerr << "warning: " << fit.dir.string() << " is incomplete; using " << fit.archive.draws.size() << " draws\n";
  return fit;
}

void check_roster(const FitRecord& fit, const VoteMatrix& votes) {
  if (fit.archive.draws.I != votes.legislators() || fit.archive.draws.J != votes.items())
    throw FormatError(fit.dir.string() + ": draws are " + std::to_string(fit.archive.draws.I) + " x " +
                      std::to_string(fit.archive.draws.J) + " but the filtered votes are " +
                      std::to_string(votes.legislators()) + " x " + std::to_string(votes.items()));
  for (std::size_t i = 0; i < fit.roster.size(); ++i)
    if (fit.roster[i] != votes.roster[i].id)
      throw FormatError(fit.dir.string() + ": legislator " + std::to_string(i + 1) + " is '" + fit.roster[i] +
                        "' in the draws but '" + votes.roster[i].id + "' in the votes");
}

struct DiagnosticsArgs {
  std::string draws, votes, legislators, out;
  std::vector<std::size_t> items;
  std::vector<double> grid{-3.0, 3.0, 61.0};
  bool per_cell = false;
};

std::vector<double> beta_grid(const std::vector<double>& spec) {
  if (spec.size() != 3 || !(spec[0] < spec[1]) || spec[2] < 2) throw UsageError("--grid takes lo,hi,count with lo < hi and count >= 2");
  const auto n = static_cast<std::size_t>(spec[2]);
  std::vector<double> grid(n);
  for (std::size_t k = 0; k < n; ++k) grid[k] = spec[0] + (spec[1] - spec[0]) * static_cast<double>(k) / static_cast<double>(n - 1);
  return grid;
}

int cmd_diagnostics(const DiagnosticsArgs& a) {
  const auto grid = beta_grid(a.grid);
  const FitRecord fit = open_fit(a.draws);
  const auto& draws = fit.archive.draws;
  const auto loaded = load_votes(a.votes, fit.config.codes,
                                 a.legislators.empty() ? std::nullopt : std::optional<std::string>(a.legislators));
  check_roster(fit, loaded.votes);
  if (draws.empty()) throw FormatError("no retained draws in " + fit.dir.string());
  for (std::size_t j : a.items)
    if (j < 1 || j > draws.J) throw UsageError("--items: item " + std::to_string(j) + " outside 1.." + std::to_string(draws.J));
  const fs::path out(a.out);
  fs::create_directories(out);
  const Link link = fit.config.model;
  const auto& roster = loaded.votes.roster;

  KeyValueDoc echo;
  echo.set("draws", fit.dir.string());
  echo.set("votes", a.votes);
  if (!a.legislators.empty()) echo.set("legislators", a.legislators);
  std::string items;
  for (std::size_t j : a.items) items += (items.empty() ? "" : ",") + std::to_string(j);
  echo.set("items", items);
  echo.set("grid", join_doubles(a.grid, ","));
  echo.set("waic_unit", a.per_cell ? "cell" : "legislator");
  write_text(out / "config.txt", echo.str());

  const WaicReport w = a.per_cell ? waic_per_cell(draws, loaded.votes, link) : waic(draws);
  {
    auto f = open_out(out / "waic.csv");
    f << "unit,waic_contribution\n";
    if (a.per_cell) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < loaded.votes.legislators(); ++i)
        for (std::size_t j = 0; j < loaded.votes.items(); ++j)
          if (loaded.votes.observed(i, j))
            f << csv_field(roster[i].id + ":" + loaded.votes.item_info[j].id) << ',' << format_double(w.pointwise[c++]) << '\n';
    } else {
      for (std::size_t i = 0; i < draws.I; ++i) f << csv_field(roster[i].id) << ',' << format_double(w.pointwise[i]) << '\n';
    }
    f << "lppd," << format_double(w.lppd) << "\npenalty," << format_double(w.penalty) << "\nwaic,"
      << format_double(w.waic) << '\n';
  }

  const auto r = ranks(draws);
  std::size_t degenerate = 0;
  std::vector<double> rank_ess;
  {
    auto f = open_out(out / "ess.csv");
    f << "legislator_id,ess_rank,ess_beta,status\n";
    std::vector<double> series(draws.size());
    for (std::size_t i = 0; i < draws.I; ++i) {
      for (std::size_t s = 0; s < draws.size(); ++s) series[s] = r.per_draw[s * draws.I + i];
      const auto er = ess(series);
      for (std::size_t s = 0; s < draws.size(); ++s) series[s] = draws.beta_at(s, i);
      const auto eb = ess(series);
      const bool bad = !er || !eb;
      degenerate += bad;
      if (er) rank_ess.push_back(*er);
      f << csv_field(roster[i].id) << ',' << (er ? format_double(*er) : "NA") << ',' << (eb ? format_double(*eb) : "NA")
        << ',' << (bad ? "degenerate" : "ok") << '\n';
    }
  }
  if (degenerate) std::cerr << "warning: " << degenerate << " ESS rows are degenerate (constant or fewer than 10 draws)\n";
  {
    auto f = open_out(out / "ranks.csv");
    f << "legislator_id,mean_rank,rank_of_mean_beta,mean_beta,beta_q05,beta_q95\n";
    std::vector<double> column(draws.size());
    for (std::size_t i = 0; i < draws.I; ++i) {
      double mean = 0.0;
      for (std::size_t s = 0; s < draws.size(); ++s) mean += column[s] = draws.beta_at(s, i);
      mean /= static_cast<double>(draws.size());
      f << csv_field(roster[i].id) << ',' << format_double(r.mean_rank[i]) << ',' << r.rank_of_mean[i] << ','
        << format_double(mean) << ',' << format_double(quantile(column, 0.05)) << ','
        << format_double(quantile(column, 0.95)) << '\n';
    }
  }
  {
    auto f = open_out(out / "loglik_trace.csv");
    f << "iter,total\n";
    for (std::size_t s = 0; s < draws.size(); ++s)
      f << draws.iterations[s] << ',' << format_double(draws.loglik_total[s]) << '\n';
  }
  for (std::size_t j : a.items) {
    auto f = open_out(out / ("curve_" + std::to_string(j) + ".csv"));
    f << "beta,mean,lower,upper\n";
    for (const auto& p : response_curve(draws, j - 1, grid, link))
      f << format_double(p.beta) << ',' << format_double(p.mean) << ',' << format_double(p.lower) << ','
        << format_double(p.upper) << '\n';
  }
  std::ostringstream summary;
  summary << "draws: " << draws.size() << (fit.archive.complete ? "" : " (incomplete run)") << "\n";
  summary << "WAIC (" << (a.per_cell ? "cell" : "legislator") << " unit): " << format_double(w.waic)
          << "  lppd: " << format_double(w.lppd) << "  penalty: " << format_double(w.penalty) << "\n";
  if (!rank_ess.empty()) summary << "median rank ESS: " << format_double(quantile(rank_ess, 0.5)) << "\n";
  write_text(out / "summary.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string draws_a, draws_b, votes, legislators, out;
  bool align_reflection = false;
};

int cmd_compare(const CompareArgs& a) {
  const FitRecord fa = open_fit(a.draws_a);
  const FitRecord fb = open_fit(a.draws_b);
  const auto loaded = load_votes(a.votes, fa.config.codes,
                                 a.legislators.empty() ? std::nullopt : std::optional<std::string>(a.legislators));
  check_roster(fa, loaded.votes);
  check_roster(fb, loaded.votes);
  const auto report = compare_models(fa.archive.draws, fb.archive.draws, a.align_reflection);
  const fs::path out(a.out);
  fs::create_directories(out);
  KeyValueDoc echo;
  echo.set("draws_a", fa.dir.string());
  echo.set("draws_b", fb.dir.string());
  echo.set("votes", a.votes);
  echo.set("align_reflection", a.align_reflection ? "true" : "false");
  write_text(out / "config.txt", echo.str());
  {
    auto f = open_out(out / "comparison.csv");
    f << "waic_a,waic_b,waic_difference,rho_mean_ranks,rho_mean,rho_q05,rho_q95,reflected\n";
    f << format_double(report.waic_a.waic) << ',' << format_double(report.waic_b.waic) << ','
      << format_double(report.waic_difference) << ',' << format_double(report.rho_mean_ranks) << ','
      << format_double(report.rho_mean) << ',' << format_double(report.rho_lower) << ','
      << format_double(report.rho_upper) << ',' << (report.reflected ? "true" : "false") << '\n';
  }
  {
    auto f = open_out(out / "spearman.csv");
    f << "draw,rho\n";
    for (std::size_t s = 0; s < report.rho_draws.size(); ++s) f << s + 1 << ',' << format_double(report.rho_draws[s]) << '\n';
  }
  std::ostringstream summary;
  summary << "WAIC difference (a - b)   rho posterior mean   90% interval\n";
  summary << format_double(report.waic_difference) << "   " << format_double(report.rho_mean) << "   ("
          << format_double(report.rho_lower) << ", " << format_double(report.rho_upper) << ")\n";
  summary << "rho of posterior mean ranks: " << format_double(report.rho_mean_ranks)
          << (report.reflected ? " (b reflected)" : "") << "\n";
  write_text(out / "summary.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  int i = 0, j = 0;
  std::uint64_t seed = 1;
  std::string out;
  double mask_rate = 0.0;
  std::string model = "logit";
  std::vector<double> vartheta{-2.0, 10.0};
  double omega_sq = 25.0, kappa_sq = 10.0;
};

Hyperparams hyper_from(const std::vector<double>& vartheta, double omega_sq, double kappa_sq) {
  if (vartheta.size() != 2) throw UsageError("--vartheta takes two values");
  Hyperparams h{{vartheta[0], vartheta[1]}, omega_sq, kappa_sq};
  try {
    h.validate();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return h;
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.i < 2 || a.j < 2) throw UsageError("--i and --j must be at least 2");
  if (!(a.mask_rate >= 0.0 && a.mask_rate < 1.0)) throw UsageError("--mask-rate must lie in [0, 1)");
  Link link;
  try {
    link = parse_link(a.model);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const Hyperparams hyper = hyper_from(a.vartheta, a.omega_sq, a.kappa_sq);
  const auto sim = simulate_votes(a.i, a.j, hyper, a.seed, a.mask_rate, link);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_votes_csv(sim.votes, out / "votes.csv");
  write_legislators_csv(sim.votes, out / "legislators.csv");
  write_truth_csv(sim, out / "truth_beta.csv", out / "truth_items.csv");
  KeyValueDoc echo;
  echo.set("i", std::to_string(a.i));
  echo.set("j", std::to_string(a.j));
  echo.set("seed", std::to_string(a.seed));
  echo.set("mask_rate", format_double(a.mask_rate));
  echo.set("model", to_string(link));
  echo.set("vartheta", join_doubles({hyper.vartheta[0], hyper.vartheta[1]}));
  echo.set("omega_sq", format_double(hyper.omega_sq));
  echo.set("kappa_sq", format_double(hyper.kappa_sq));
  echo.set("attempts", std::to_string(sim.attempts));
  write_text(out / "config.txt", echo.str());
  std::cout << sim.report.str();
  return 0;
}

// ---------------------------------------------------------------------------

struct PriorThetaArgs {
  std::size_t n = 100000;
  std::uint64_t seed = 1;
  std::string out;
  std::string model = "logit";
  std::vector<double> vartheta{-2.0, 10.0};
  double omega_sq = 25.0, kappa_sq = 10.0;
};

int cmd_prior_theta(const PriorThetaArgs& a) {
  if (a.n < 1) throw UsageError("--n must be at least 1");
  Link link;
  try {
    link = parse_link(a.model);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  const Hyperparams hyper = hyper_from(a.vartheta, a.omega_sq, a.kappa_sq);
  RngStream rng(a.seed, stream_id(0x61, 0, 0));
  const auto theta = sample_prior_theta(hyper, a.n, rng, link);
  auto f = open_out(a.out);
  f << "theta\n";
  double low = 0, high = 0, middle = 0;
  for (double t : theta) {
    f << format_double(t) << '\n';
    low += t < 0.1;
    high += t > 0.9;
    middle += t > 0.45 && t < 0.55;
  }
  const double n = static_cast<double>(theta.size());
  std::cout << "mass (0, 0.1): " << low / n << "  (0.9, 1): " << high / n << "  (0.45, 0.55): " << middle / n << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian unfolding models for roll-call votes"};
  app.require_subcommand(1);

  ApproxArgs approx;
  auto* sub_approx = app.add_subcommand("approx-gumbel", "Gaussian-mixture approximation to the Gumbel density");
  sub_approx->add_option("--k", approx.k, "Number of mixture components")->required();
  sub_approx->add_option("--out", approx.out, "Mixture file to write")->required();
  sub_approx->add_flag("--fit", approx.fit, "Fit by KL minimization (default)");
  sub_approx->add_flag("--table", approx.table, "Write the published table (k = 6 or 10)");
  sub_approx->add_option("--restarts", approx.restarts, "Optimizer restarts per K");
  sub_approx->add_option("--seed", approx.seed, "Seed for restart jitter");
  sub_approx->add_option("--panels", approx.panels, "Gauss-Legendre panels over [-10, 40]");
  sub_approx->add_option("--kl-curve", approx.kl_curve, "Also write KL for K = 1..k (warm-started path)");

  FitArgs fit;
  auto* sub_fit = app.add_subcommand("fit", "Run the Gibbs sampler");
  sub_fit->add_option("--config", fit.config, "Configuration file (key = value)");
  for (const auto& key : RunConfig::keys()) {
    if (key == "mixture_components") continue;
    fit.overrides[key];
  }
  for (auto& [key, value] : fit.overrides) sub_fit->add_option("--" + dashed(key), value, "Overrides config key " + key);

  DiagnosticsArgs diag;
  auto* sub_diag = app.add_subcommand("diagnostics", "WAIC, ESS, ranks and response curves from a draws directory");
  sub_diag->add_option("--draws", diag.draws, "Draws directory (or fit output directory)")->required();
  sub_diag->add_option("--votes", diag.votes, "Votes CSV used for the fit")->required();
  sub_diag->add_option("--legislators", diag.legislators, "Legislator metadata CSV");
  sub_diag->add_option("--out", diag.out, "Report directory")->required();
  sub_diag->add_option("--items", diag.items, "Items (1-based) for response curves")->delimiter(',');
  sub_diag->add_option("--grid", diag.grid, "Curve grid lo,hi,count")->delimiter(',');
  sub_diag->add_flag("--per-cell-waic", diag.per_cell, "Use the vote cell as the WAIC unit");

  CompareArgs cmp;
  auto* sub_cmp = app.add_subcommand("compare", "WAIC difference and rank agreement of two fits");
  sub_cmp->add_option("--draws-a", cmp.draws_a, "First draws directory")->required();
  sub_cmp->add_option("--draws-b", cmp.draws_b, "Second draws directory")->required();
  sub_cmp->add_option("--votes", cmp.votes, "Votes CSV used for both fits")->required();
  sub_cmp->add_option("--legislators", cmp.legislators, "Legislator metadata CSV");
  sub_cmp->add_option("--out", cmp.out, "Report directory")->required();
  sub_cmp->add_flag("--align-reflection", cmp.align_reflection, "Reverse b's ranks when the fits are mirrored");

  SimulateArgs sim;
  auto* sub_sim = app.add_subcommand("simulate", "Synthetic votes from the model");
  sub_sim->add_option("--i", sim.i, "Legislators")->required();
  sub_sim->add_option("--j", sim.j, "Items")->required();
  sub_sim->add_option("--seed", sim.seed, "Seed");
  sub_sim->add_option("--out", sim.out, "Output directory")->required();
  sub_sim->add_option("--mask-rate", sim.mask_rate, "Probability that a cell is missing");
  sub_sim->add_option("--model", sim.model, "Generating link: logit or probit");
  sub_sim->add_option("--vartheta", sim.vartheta, "Prior location of delta")->delimiter(',');
  sub_sim->add_option("--omega-sq", sim.omega_sq, "Prior variance of alpha");
  sub_sim->add_option("--kappa-sq", sim.kappa_sq, "Prior variance of delta");

  PriorThetaArgs prior;
  auto* sub_prior = app.add_subcommand("prior-theta", "Draws of the implied prior on the response probability");
  sub_prior->add_option("--n", prior.n, "Number of draws");
  sub_prior->add_option("--seed", prior.seed, "Seed");
  sub_prior->add_option("--out", prior.out, "CSV to write")->required();
  sub_prior->add_option("--model", prior.model, "Link: logit or probit");
  sub_prior->add_option("--vartheta", prior.vartheta, "Prior location of delta")->delimiter(',');
  sub_prior->add_option("--omega-sq", prior.omega_sq, "Prior variance of alpha");
  sub_prior->add_option("--kappa-sq", prior.kappa_sq, "Prior variance of delta");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sub_approx->parsed()) return cmd_approx_gumbel(approx);
    if (sub_fit->parsed()) return cmd_fit(fit);
    if (sub_diag->parsed()) return cmd_diagnostics(diag);
    if (sub_cmp->parsed()) return cmd_compare(cmp);
    if (sub_sim->parsed()) return cmd_simulate(sim);
    if (sub_prior->parsed()) return cmd_prior_theta(prior);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
