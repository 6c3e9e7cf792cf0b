#ifndef UNFOLD_CONFIG_HPP
#define UNFOLD_CONFIG_HPP

// Run configuration for `unfold fit`: a "key = value" file whose keys mirror
// the command-line flags. Unknown keys are rejected. The effective
// configuration is echoed next to the draws and can be fed back with --config.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "unfold/data_io.hpp"
#include "unfold/gumbel_mix.hpp"
#include "unfold/model.hpp"
#include "unfold/sampler.hpp"
#include "unfold/text.hpp"

namespace unfold {

enum class Schedule { desk, paper };

struct RunConfig {
  std::string votes;
  std::string legislators;
  Link model = Link::logit;
  std::string mixture_file;
  std::optional<GaussianMixture> mixture;  // explicit mixture_pi / mixture_m / mixture_s
  Schedule schedule = Schedule::desk;
  std::optional<std::size_t> burn_in, n_keep, thin;
  std::size_t flip_every = 5;
  double flip_sign_prob = 0.1;
  std::uint64_t seed = 1;
  InitMode init_mode = InitMode::random;
  Hyperparams hyper;
  int threads = 1;
  std::string out;
  CastCodeMap codes;

  static const std::set<std::string>& keys() {
    static const std::set<std::string> k{
        "votes",     "legislators", "model",      "mixture_file",   "mixture_pi",  "mixture_m",
        "mixture_s", "schedule",    "burn_in",    "n_keep",         "thin",        "flip_every",
        "flip_sign_prob", "seed",   "init_mode",  "vartheta",       "omega_sq",    "kappa_sq",
        "threads",   "out",         "yea_codes",  "nay_codes",      "missing_codes", "mixture_components"};
    return k;
  }

  /// Applies every key of doc on top of the current values.
  void apply(const KeyValueDoc& doc) {
    for (const auto& [key, value] : doc.entries())
      if (!keys().contains(key)) throw FormatError("unknown config key '" + key + "'");
    auto get = [&](const char* key) -> std::optional<std::string> {
      if (!doc.contains(key)) return std::nullopt;
      return doc.at(key);
    };
    if (auto v = get("votes")) votes = *v;
    if (auto v = get("legislators")) legislators = *v;
    if (auto v = get("model")) model = parse_link(*v);
    if (auto v = get("mixture_file")) mixture_file = *v;
    const bool any_mix = doc.contains("mixture_pi") || doc.contains("mixture_m") || doc.contains("mixture_s");
    if (any_mix) {
      if (!(doc.contains("mixture_pi") && doc.contains("mixture_m") && doc.contains("mixture_s")))
        throw FormatError("mixture_pi, mixture_m and mixture_s must be given together");
      mixture = GaussianMixture{parse_double_list(doc.at("mixture_pi")), parse_double_list(doc.at("mixture_m")),
                                parse_double_list(doc.at("mixture_s"))};
      validate_mixture(*mixture, 1e-2);
      if (auto k = get("mixture_components"); k && parse_integer<std::size_t>(*k) != mixture->size())
        throw FormatError("mixture_components does not match the mixture lists");
    }
    if (auto v = get("schedule")) {
      if (*v == "desk") schedule = Schedule::desk;
      else if (*v == "paper") schedule = Schedule::paper;
      else throw FormatError("schedule must be desk or paper");
    }
    if (auto v = get("burn_in")) burn_in = parse_integer<std::size_t>(*v);
    if (auto v = get("n_keep")) n_keep = parse_integer<std::size_t>(*v);
    if (auto v = get("thin")) thin = parse_integer<std::size_t>(*v);
    if (auto v = get("flip_every")) flip_every = parse_integer<std::size_t>(*v);
    if (auto v = get("flip_sign_prob")) flip_sign_prob = parse_double(*v);
    if (auto v = get("seed")) seed = parse_integer<std::uint64_t>(*v);
    if (auto v = get("init_mode")) init_mode = parse_init_mode(*v);
    if (auto v = get("vartheta")) {
      const auto vt = parse_double_list(*v);
      if (vt.size() != 2) throw FormatError("vartheta needs two values");
      hyper.vartheta = {vt[0], vt[1]};
    }
    if (auto v = get("omega_sq")) hyper.omega_sq = parse_double(*v);
    if (auto v = get("kappa_sq")) hyper.kappa_sq = parse_double(*v);
    if (auto v = get("threads")) threads = parse_integer<int>(*v);
    if (auto v = get("out")) out = *v;
    if (doc.contains("yea_codes") || doc.contains("nay_codes") || doc.contains("missing_codes")) {
      auto ints = [&](const char* key, const std::vector<int>& fallback) {
        if (!doc.contains(key)) return fallback;
        std::vector<int> list;
        for (const auto& part : split(doc.at(key), ',')) list.push_back(parse_integer<int>(part));
        return list;
      };
      codes = CastCodeMap::from_lists(ints("yea_codes", codes.list(Vote::Yea)), ints("nay_codes", codes.list(Vote::Nay)),
                                      ints("missing_codes", codes.list(Vote::Missing)));
    }
  }

  static RunConfig from_file(const std::string& path) {
    RunConfig config;
    config.apply(KeyValueDoc::read_file(path));
    return config;
  }

  /// Mixture actually used: N(0, 1) for probit, otherwise the explicit lists,
  /// the mixture file, or the six-component table.
  GaussianMixture effective_mixture() const {
    if (model == Link::probit) {
      if (mixture && !(normalized(*mixture) == standard_normal_mixture()))
        throw std::invalid_argument("the probit model uses the single N(0, 1) component; drop the mixture keys");
      if (!mixture_file.empty()) throw std::invalid_argument("the probit model does not take a mixture file");
      return standard_normal_mixture();
    }
    if (mixture && !mixture_file.empty()) throw std::invalid_argument("give either mixture_file or mixture lists, not both");
    if (mixture) return *mixture;
    if (!mixture_file.empty()) return read_mixture_file(mixture_file);
    return builtin_table(6);
  }

  SamplerConfig sampler() const {
    SamplerConfig config = schedule == Schedule::paper ? SamplerConfig::paper_scale() : SamplerConfig::desk_scale();
    if (burn_in) config.burn_in = *burn_in;
    if (n_keep) config.n_keep = *n_keep;
    if (thin) config.thin = *thin;
    config.mixture = effective_mixture();
    config.link = model;
    config.flip_every = flip_every;
    config.flip_sign_prob = flip_sign_prob;
    config.seed = seed;
    config.init_mode = init_mode;
    return config;
  }

  void validate() const {
    if (votes.empty()) throw std::invalid_argument("no votes file given");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
    hyper.validate();
    sampler().validate();
  }

  /// Effective configuration with every sampler setting resolved. Output
  /// location and thread count are left out: neither changes the draws.
  KeyValueDoc echo() const {
    const SamplerConfig s = sampler();
    KeyValueDoc doc;
    doc.set("votes", votes);
    if (!legislators.empty()) doc.set("legislators", legislators);
    doc.set("model", to_string(model));
    doc.set("mixture_components", std::to_string(s.mixture.size()));
    doc.set("mixture_pi", join_doubles(s.mixture.weights));
    doc.set("mixture_m", join_doubles(s.mixture.means));
    doc.set("mixture_s", join_doubles(s.mixture.sds));
    doc.set("schedule", schedule == Schedule::paper ? "paper" : "desk");
    doc.set("burn_in", std::to_string(s.burn_in));
    doc.set("n_keep", std::to_string(s.n_keep));
    doc.set("thin", std::to_string(s.thin));
    doc.set("flip_every", std::to_string(s.flip_every));
    doc.set("flip_sign_prob", format_double(s.flip_sign_prob));
    doc.set("seed", std::to_string(s.seed));
    doc.set("init_mode", to_string(s.init_mode));
    doc.set("vartheta", join_doubles({hyper.vartheta[0], hyper.vartheta[1]}));
    doc.set("omega_sq", format_double(hyper.omega_sq));
    doc.set("kappa_sq", format_double(hyper.kappa_sq));
    auto ints = [](const std::vector<int>& list) {
      std::string text;
      for (std::size_t k = 0; k < list.size(); ++k) text += (k ? ", " : "") + std::to_string(list[k]);
      return text;
    };
    doc.set("yea_codes", ints(codes.list(Vote::Yea)));
    doc.set("nay_codes", ints(codes.list(Vote::Nay)));
    doc.set("missing_codes", ints(codes.list(Vote::Missing)));
    return doc;
  }
};

}  // namespace unfold

#endif  // UNFOLD_CONFIG_HPP
