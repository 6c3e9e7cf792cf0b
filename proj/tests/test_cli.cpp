#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "unfold/config.hpp"
#include "unfold/data_io.hpp"
#include "unfold/diagnostics.hpp"
#include "unfold/gumbel_mix.hpp"

using namespace unfold;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "unfold_cli_tests" / (std::string(info->test_suite_name()) + "_" + info->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code;
  std::string output;  // stdout and stderr
};

Run run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(UNFOLD_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_text(e.path());
  return files;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// last "key,value" row of a summary CSV such as waic.csv
double row_value(const fs::path& path, const std::string& key) {
  for (const auto& line : lines(read_text(path)))
    if (line.rfind(key + ",", 0) == 0) return std::stod(line.substr(key.size() + 1));
  return NAN;
}

const char* kShortFit = "--burn-in 20 --n-keep 30 --thin 2 --flip-every 3";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  EXPECT_EQ(run("", log).code, 2);
  EXPECT_EQ(run("frobnicate", log).code, 2);
  EXPECT_EQ(run("approx-gumbel --k 0 --out " + (dir / "m.txt").string(), log).code, 2);
  EXPECT_EQ(run("approx-gumbel --k 7 --table --out " + (dir / "m.txt").string(), log).code, 2);
  EXPECT_EQ(run("approx-gumbel --k 6 --table --fit --out " + (dir / "m.txt").string(), log).code, 2);
  EXPECT_EQ(run("simulate --i 1 --j 10 --out " + dir.string(), log).code, 2);
  EXPECT_EQ(run("simulate --i 10 --j 10 --model tobit --out " + dir.string(), log).code, 2);
  EXPECT_EQ(run("fit --votes x.csv", log).code, 2);
  EXPECT_EQ(run("fit --votes x.csv --out o --thin 0", log).code, 2);
  EXPECT_EQ(run("fit --votes x.csv --out o --bogus 1", log).code, 2);
  const auto r = run("fit --votes x.csv --out o --model tobit", log);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("usage error"), std::string::npos);
  EXPECT_EQ(run("prior-theta --n 0 --out " + (dir / "t.csv").string(), log).code, 2);
}

TEST(Cli, ApproxGumbelTable) {
  const auto dir = scratch();
  const auto r = run("approx-gumbel --k 6 --table --out " + (dir / "mix6.txt").string(), dir / "log.txt");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(read_mixture_file((dir / "mix6.txt").string()), builtin_table(6));
  EXPECT_NE(r.output.find("KL = "), std::string::npos);
}

TEST(Cli, ApproxGumbelSingleComponentFit) {
  const auto dir = scratch();
  const auto r = run("approx-gumbel --k 1 --fit --out " + (dir / "mix1.txt").string(), dir / "log.txt");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto mix = read_mixture_file((dir / "mix1.txt").string());
  ASSERT_EQ(mix.size(), 1u);
  EXPECT_NEAR(mix.means[0], 0.5772156649015329, 1e-4);
  EXPECT_NEAR(mix.sds[0] * mix.sds[0], 1.6449340668482264, 1e-4);
}

TEST(Cli, SimulateRoundTripAndDeterminism) {
  const auto dir = scratch();
  ASSERT_EQ(run("simulate --i 30 --j 60 --seed 5 --mask-rate 0.05 --out " + (dir / "a").string(), dir / "log.txt").code, 0);
  ASSERT_EQ(run("simulate --i 30 --j 60 --seed 5 --mask-rate 0.05 --out " + (dir / "b").string(), dir / "log.txt").code, 0);
  EXPECT_EQ(tree(dir / "a"), tree(dir / "b"));
  const auto sim = simulate_votes(30, 60, Hyperparams{}, 5, 0.05);
  const auto loaded = load_votes((dir / "a" / "votes.csv").string());
  EXPECT_TRUE(loaded.votes == sim.votes);
  for (const char* name : {"votes.csv", "legislators.csv", "truth_beta.csv", "truth_items.csv", "config.txt"})
    EXPECT_TRUE(fs::exists(dir / "a" / name)) << name;
}

TEST(Cli, FitIsReproducibleAcrossRunsThreadsAndEcho) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 20 --j 40 --seed 8 --out " + (dir / "sim").string(), log).code, 0);
  const std::string votes = (dir / "sim" / "votes.csv").string();
  const std::string common = "fit --votes " + votes + " " + kShortFit + " --seed 11 --out ";
  ASSERT_EQ(run(common + (dir / "f1").string(), log).code, 0) << read_text(log);
  ASSERT_EQ(run(common + (dir / "f2").string() + " --threads 4", log).code, 0);
  const auto a = tree(dir / "f1" / "draws");
  EXPECT_EQ(a, tree(dir / "f2" / "draws"));
  for (const char* name : {"beta.csv", "alpha.csv", "delta.csv", "z.csv", "loglik.csv", "status.txt", "config.txt",
                           "legislators.csv", "items.csv"})
    EXPECT_TRUE(a.contains(name)) << name;
  EXPECT_EQ(a.at("status.txt"), "retained = 30\ncomplete = true\n");
  EXPECT_EQ(lines(a.at("beta.csv")).size(), 31u);
  EXPECT_TRUE(fs::exists(dir / "f1" / "filter_report.txt"));
  EXPECT_TRUE(fs::exists(dir / "f1" / "progress.log"));

  // the echo alone reproduces the run
  ASSERT_EQ(run("fit --config " + (dir / "f1" / "draws" / "config.txt").string() + " --out " + (dir / "f3").string(), log).code, 0);
  EXPECT_EQ(a, tree(dir / "f3" / "draws"));

  ASSERT_EQ(run("fit --votes " + votes + " " + kShortFit + " --seed 12 --out " + (dir / "f4").string(), log).code, 0);
  EXPECT_NE(a.at("beta.csv"), tree(dir / "f4" / "draws").at("beta.csv"));
}

TEST(Cli, ProbitEchoRecordsSingleComponent) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 15 --j 30 --seed 9 --out " + (dir / "sim").string(), log).code, 0);
  ASSERT_EQ(run("fit --votes " + (dir / "sim" / "votes.csv").string() + " --model probit " + kShortFit + " --out " +
                    (dir / "fit").string(), log).code, 0);
  const auto echo = KeyValueDoc::read_file((dir / "fit" / "draws" / "config.txt").string());
  EXPECT_EQ(echo.at("model"), "probit");
  EXPECT_EQ(echo.at("mixture_components"), "1");
  EXPECT_EQ(echo.at("mixture_m"), "0");
  EXPECT_EQ(echo.at("mixture_s"), "1");
  EXPECT_FALSE(echo.contains("out"));
  EXPECT_FALSE(echo.contains("threads"));
  const auto logit = KeyValueDoc::parse(RunConfig{}.echo().str());
  EXPECT_EQ(logit.at("mixture_components"), "6");
}

TEST(Cli, ProgressLogEveryThousandIterations) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 10 --j 20 --seed 3 --out " + (dir / "sim").string(), log).code, 0);
  ASSERT_EQ(run("fit --votes " + (dir / "sim" / "votes.csv").string() +
                    " --burn-in 1500 --n-keep 10 --thin 50 --out " + (dir / "fit").string(), log).code, 0);
  const auto rows = lines(read_text(dir / "fit" / "progress.log"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "iteration,loglik,seconds_per_1000,flip_acceptance");
  EXPECT_EQ(rows[1].rfind("1000,", 0), 0u);
  EXPECT_EQ(rows[2].rfind("2000,", 0), 0u);
}

TEST(Cli, IngestionFailureExitsOneWithCounts) {
  const auto dir = scratch();
  std::ofstream(dir / "votes.csv") << "legislator_id,item_id,cast_code\nA,V1,1\nB,V1,1\nA,V2,6\nB,V2,6\n";
  const auto r = run("fit --votes " + (dir / "votes.csv").string() + " --out " + (dir / "fit").string(), dir / "log.txt");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("pass 1 unanimous items: dropped 2"), std::string::npos) << r.output;
  std::ofstream(dir / "bad.csv") << "legislator_id,item_id,cast_code\nA,V1,x\n";
  const auto bad = run("fit --votes " + (dir / "bad.csv").string() + " --out " + (dir / "fit").string(), dir / "log.txt");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.output.find("bad.csv:2:"), std::string::npos);
}

TEST(Cli, DiagnosticsOutputs) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 20 --j 40 --seed 4 --out " + (dir / "sim").string(), log).code, 0);
  const std::string votes = (dir / "sim" / "votes.csv").string();
  ASSERT_EQ(run("fit --votes " + votes + " " + kShortFit + " --out " + (dir / "fit").string(), log).code, 0);
  const auto r = run("diagnostics --draws " + (dir / "fit").string() + " --votes " + votes + " --items 1,3 --out " +
                         (dir / "diag").string(), log);
  ASSERT_EQ(r.code, 0) << r.output;
  for (const char* name : {"waic.csv", "ess.csv", "ranks.csv", "loglik_trace.csv", "curve_1.csv", "curve_3.csv",
                           "summary.txt", "config.txt"})
    EXPECT_TRUE(fs::exists(dir / "diag" / name)) << name;
  EXPECT_FALSE(fs::exists(dir / "diag" / "curve_2.csv"));

  // WAIC against direct summation over the stored per-legislator terms
  const auto draws = read_draws(dir / "fit" / "draws").draws;
  long double oracle = 0.0L;
  for (std::size_t i = 0; i < draws.I; ++i) {
    long double mean_exp = 0.0L, mean = 0.0L, var = 0.0L;
    for (std::size_t s = 0; s < draws.size(); ++s) {
      mean_exp += std::exp(static_cast<long double>(draws.loglik_at(s, i)));
      mean += draws.loglik_at(s, i);
    }
    mean_exp /= draws.size();
    mean /= draws.size();
    for (std::size_t s = 0; s < draws.size(); ++s) var += std::pow(draws.loglik_at(s, i) - mean, 2);
    oracle += std::log(mean_exp) - var / (draws.size() - 1);
  }
  EXPECT_NEAR(row_value(dir / "diag" / "waic.csv", "waic"), static_cast<double>(oracle), 1e-8);

  const auto curve = lines(read_text(dir / "diag" / "curve_1.csv"));
  EXPECT_EQ(curve[0], "beta,mean,lower,upper");
  EXPECT_EQ(curve.size(), 62u);
  EXPECT_EQ(lines(read_text(dir / "diag" / "ranks.csv"))[0], "legislator_id,mean_rank,rank_of_mean_beta,mean_beta,beta_q05,beta_q95");
  EXPECT_EQ(lines(read_text(dir / "diag" / "loglik_trace.csv")).size(), 31u);

  // no items: no curves
  ASSERT_EQ(run("diagnostics --draws " + (dir / "fit").string() + " --votes " + votes + " --out " + (dir / "d2").string(), log).code, 0);
  for (const auto& e : fs::directory_iterator(dir / "d2")) EXPECT_EQ(e.path().filename().string().rfind("curve_", 0), std::string::npos);

  // per-cell unit
  ASSERT_EQ(run("diagnostics --per-cell-waic --draws " + (dir / "fit").string() + " --votes " + votes + " --out " +
                    (dir / "d3").string(), log).code, 0);
  EXPECT_TRUE(std::isfinite(row_value(dir / "d3" / "waic.csv", "waic")));

  EXPECT_EQ(run("diagnostics --draws " + (dir / "fit").string() + " --votes " + votes + " --items 999 --out " +
                    (dir / "d4").string(), log).code, 2);
}

TEST(Cli, DiagnosticsSingleDrawIsDegenerate) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 10 --j 20 --seed 6 --out " + (dir / "sim").string(), log).code, 0);
  const std::string votes = (dir / "sim" / "votes.csv").string();
  ASSERT_EQ(run("fit --votes " + votes + " --burn-in 5 --n-keep 1 --thin 1 --out " + (dir / "fit").string(), log).code, 0);
  const auto r = run("diagnostics --draws " + (dir / "fit").string() + " --votes " + votes + " --out " + (dir / "diag").string(), log);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("warning"), std::string::npos);
  const auto ess = lines(read_text(dir / "diag" / "ess.csv"));
  ASSERT_GT(ess.size(), 1u);
  EXPECT_NE(ess[1].find("NA,NA,degenerate"), std::string::npos);
}

TEST(Cli, DiagnosticsRejectsForeignVotes) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 10 --j 20 --seed 6 --out " + (dir / "a").string(), log).code, 0);
  ASSERT_EQ(run("simulate --i 12 --j 20 --seed 7 --out " + (dir / "b").string(), log).code, 0);
  ASSERT_EQ(run("fit --votes " + (dir / "a" / "votes.csv").string() + " " + kShortFit + " --out " + (dir / "fit").string(), log).code, 0);
  const auto r = run("diagnostics --draws " + (dir / "fit").string() + " --votes " + (dir / "b" / "votes.csv").string() +
                         " --out " + (dir / "diag").string(), log);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("draws are"), std::string::npos) << r.output;
}

TEST(Cli, CompareSelfAndMismatch) {
  const auto dir = scratch();
  const auto log = dir / "log.txt";
  ASSERT_EQ(run("simulate --i 15 --j 30 --seed 10 --out " + (dir / "a").string(), log).code, 0);
  ASSERT_EQ(run("simulate --i 16 --j 30 --seed 11 --out " + (dir / "b").string(), log).code, 0);
  const std::string votes = (dir / "a" / "votes.csv").string();
  ASSERT_EQ(run("fit --votes " + votes + " " + kShortFit + " --out " + (dir / "fa").string(), log).code, 0);
  ASSERT_EQ(run("fit --votes " + (dir / "b" / "votes.csv").string() + " " + kShortFit + " --out " + (dir / "fb").string(), log).code, 0);
  const auto r = run("compare --draws-a " + (dir / "fa").string() + " --draws-b " + (dir / "fa").string() + " --votes " +
                         votes + " --out " + (dir / "cmp").string(), log);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(read_text(dir / "cmp" / "comparison.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "waic_a,waic_b,waic_difference,rho_mean_ranks,rho_mean,rho_q05,rho_q95,reflected");
  EXPECT_NE(rows[1].find(",0,1,1,1,1,false"), std::string::npos) << rows[1];
  EXPECT_EQ(lines(read_text(dir / "cmp" / "spearman.csv")).size(), 31u);
  EXPECT_TRUE(fs::exists(dir / "cmp" / "summary.txt"));

  EXPECT_EQ(run("compare --draws-a " + (dir / "fa").string() + " --draws-b " + (dir / "fb").string() + " --votes " +
                    votes + " --out " + (dir / "cmp2").string(), log).code, 1);
}

TEST(Cli, PriorTheta) {
  const auto dir = scratch();
  const auto r = run("prior-theta --n 2000 --seed 3 --out " + (dir / "theta.csv").string(), dir / "log.txt");
  ASSERT_EQ(r.code, 0);
  const auto rows = lines(read_text(dir / "theta.csv"));
  ASSERT_EQ(rows.size(), 2001u);
  EXPECT_EQ(rows[0], "theta");
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const double t = std::stod(rows[k]);
    ASSERT_GT(t, 0.0);
    ASSERT_LT(t, 1.0);
  }
}
