// Simulate a small roll-call matrix, fit the logit unfolding model and report
// how well the posterior mean ranks recover the true ordering.

#include <cmath>
#include <iostream>

#include "unfold/data_io.hpp"
#include "unfold/diagnostics.hpp"
#include "unfold/sampler.hpp"

int main() {
  using namespace unfold;
  const Hyperparams hyper;
  const auto sim = simulate_votes(30, 80, hyper, 11);

  SamplerConfig config;
  config.burn_in = 1000;
  config.n_keep = 500;
  config.thin = 2;
  config.seed = 3;
  RunOptions options;
  options.threads = 2;
  const auto run = run_chain(sim.votes, hyper, config, options);

  const auto summary = ranks(run.draws);
  const double rho = spearman(rank_vector(summary.mean_rank), rank_vector(sim.beta));
  const auto w = waic(run.draws);
  std::cout << sim.votes.legislators() << " legislators, " << sim.votes.items() << " items\n"
            << "Spearman(posterior mean rank, truth) = " << rho << "  (sign reflects the orientation of the fit)\n"
            << "WAIC = " << w.waic << "\n";
  return std::abs(rho) > 0.8 ? 0 : 1;
}
