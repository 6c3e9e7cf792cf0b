#ifndef UNFOLD_DATA_IO_HPP
#define UNFOLD_DATA_IO_HPP

// Vote ingestion (long CSV of legislator_id, item_id, cast_code), the
// unanimity / attendance filters, synthetic data, and CSV persistence of
// retained draws.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "unfold/model.hpp"
#include "unfold/rng.hpp"
#include "unfold/sampler.hpp"
#include "unfold/text.hpp"

namespace unfold {

namespace fs = std::filesystem;

/// Maps voteview cast codes 0..9 to votes. Default: 1-3 Yea, 4-6 Nay, 0 and 7-9 Missing.
struct CastCodeMap {
  std::array<Vote, 10> codes{Vote::Missing, Vote::Yea,     Vote::Yea,     Vote::Yea,     Vote::Nay,
                             Vote::Nay,     Vote::Nay,     Vote::Missing, Vote::Missing, Vote::Missing};

  /// Builds a map from three disjoint code lists that together cover 0..9.
  static CastCodeMap from_lists(const std::vector<int>& yea, const std::vector<int>& nay,
                                const std::vector<int>& missing) {
    CastCodeMap map;
    std::array<int, 10> hits{};
    auto assign = [&](const std::vector<int>& list, Vote v) {
      for (int c : list) {
        if (c < 0 || c > 9) throw std::invalid_argument("cast code " + std::to_string(c) + " outside 0..9");
        ++hits[c];
        map.codes[c] = v;
      }
    };
    assign(yea, Vote::Yea);
    assign(nay, Vote::Nay);
    assign(missing, Vote::Missing);
    for (int c = 0; c < 10; ++c)
      if (hits[c] != 1)
        throw std::invalid_argument("cast code " + std::to_string(c) + " must appear in exactly one code list");
    return map;
  }

  std::vector<int> list(Vote v) const {
    std::vector<int> out;
    for (int c = 0; c < 10; ++c)
      if (codes[c] == v) out.push_back(c);
    return out;
  }

  bool operator==(const CastCodeMap&) const = default;
};

struct FilterStage {
  std::string name;
  std::size_t dropped;
};

struct FilterReport {
  std::size_t raw_legislators = 0;
  std::size_t raw_items = 0;
  std::size_t raw_records = 0;
  std::vector<FilterStage> stages;
  std::size_t legislators = 0;
  std::size_t items = 0;

  std::string str() const {
    std::ostringstream out;
    out << "raw: " << raw_legislators << " legislators, " << raw_items << " items";
    if (raw_records) out << ", " << raw_records << " records";
    out << "\n";
    for (const auto& s : stages) out << s.name << ": dropped " << s.dropped << "\n";
    out << "kept: " << legislators << " legislators, " << items << " items\n";
    return out.str();
  }
};

class FilterError : public std::runtime_error {
 public:
  FilterError(const std::string& message, FilterReport report)
      : std::runtime_error(message), report_(std::move(report)) {}
  const FilterReport& report() const { return report_; }

 private:
  FilterReport report_;
};

/// Rows and columns kept, in their original order.
inline VoteMatrix submatrix(const VoteMatrix& votes, const std::vector<std::size_t>& rows,
                            const std::vector<std::size_t>& cols) {
  VoteMatrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.roster[r] = votes.roster[rows[r]];
    for (std::size_t c = 0; c < cols.size(); ++c) out.set(r, c, votes.at(rows[r], cols[c]));
  }
  for (std::size_t c = 0; c < cols.size(); ++c) out.item_info[c] = votes.item_info[cols[c]];
  return out;
}

/// True when the observed cells of item j contain both a Yea and a Nay.
inline bool item_contested(const VoteMatrix& votes, std::size_t j) {
  bool yea = false, nay = false;
  for (std::size_t i = 0; i < votes.legislators(); ++i) {
    yea |= votes.at(i, j) == Vote::Yea;
    nay |= votes.at(i, j) == Vote::Nay;
  }
  return yea && nay;
}

/// Strictly more than 40% of the legislator's cells are missing.
inline bool attendance_too_low(const VoteMatrix& votes, std::size_t i) {
  std::size_t missing = 0;
  for (std::size_t j = 0; j < votes.items(); ++j) missing += !votes.observed(i, j);
  return 5 * missing > 2 * votes.items();
}

/// Drops unanimous (or empty) items, then legislators missing more than 40% of
/// the remaining items, repeating both passes until nothing changes.
inline std::pair<VoteMatrix, FilterReport> filter_votes(const VoteMatrix& votes, FilterReport report = {}) {
  if (report.raw_legislators == 0 && report.raw_items == 0) {
    report.raw_legislators = votes.legislators();
    report.raw_items = votes.items();
  }
  VoteMatrix current = votes;
  for (int pass = 1;; ++pass) {
    std::vector<std::size_t> rows(current.legislators()), cols;
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t j = 0; j < current.items(); ++j)
      if (item_contested(current, j)) cols.push_back(j);
    const std::size_t items_dropped = current.items() - cols.size();
    current = submatrix(current, rows, cols);

    rows.clear();
    cols.resize(current.items());
    std::iota(cols.begin(), cols.end(), 0);
    for (std::size_t i = 0; i < current.legislators(); ++i)
      if (!attendance_too_low(current, i)) rows.push_back(i);
    const std::size_t legislators_dropped = current.legislators() - rows.size();
    current = submatrix(current, rows, cols);

    report.stages.push_back({"pass " + std::to_string(pass) + " unanimous items", items_dropped});
    report.stages.push_back({"pass " + std::to_string(pass) + " legislators over 40% missing", legislators_dropped});
    if (items_dropped == 0 && legislators_dropped == 0) break;
  }
  report.legislators = current.legislators();
  report.items = current.items();
  if (current.legislators() == 0 || current.items() == 0)
    throw FilterError("no votes left after filtering", report);
  return {std::move(current), std::move(report)};
}

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

inline std::vector<std::size_t> locate_columns(const std::vector<std::string>& header,
                                               const std::vector<std::string>& wanted, const std::string& path) {
  std::vector<std::size_t> where;
  for (const auto& name : wanted) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(path + ": missing column '" + name + "'");
    where.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return where;
}

}  // namespace detail

/// Reads the vote records without filtering; legislators and items are
/// ordered by first appearance.
inline VoteMatrix read_vote_records(const std::string& path, const CastCodeMap& map, std::size_t* records = nullptr) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw FormatError(path + ": empty file (a header row is required)");
  const auto header = split_csv_record(lines[0]);
  const auto col = detail::locate_columns(header, {"legislator_id", "item_id", "cast_code"}, path);
  std::unordered_map<std::string, std::size_t> leg_index, item_index;
  std::vector<std::string> leg_ids, item_ids;
  struct Record {
    std::size_t i, j;
    Vote v;
  };
  std::vector<Record> rows;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const std::string where = path + ":" + std::to_string(n + 1) + ": ";
    std::vector<std::string> fields;
    try {
      fields = split_csv_record(lines[n]);
    } catch (const FormatError& e) {
      throw FormatError(where + e.what());
    }
    if (fields.size() != header.size())
      throw FormatError(where + "expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    const auto& leg = fields[col[0]];
    const auto& item = fields[col[1]];
    if (leg.empty() || item.empty()) throw FormatError(where + "empty legislator_id or item_id");
    int code = 0;
    try {
      code = parse_integer<int>(fields[col[2]]);
    } catch (const FormatError&) {
      throw FormatError(where + "cast_code '" + fields[col[2]] + "' is not an integer");
    }
    if (code < 0 || code > 9) throw FormatError(where + "cast_code " + std::to_string(code) + " outside 0..9");
    auto [li, new_leg] = leg_index.try_emplace(leg, leg_ids.size());
    if (new_leg) leg_ids.push_back(leg);
    auto [ii, new_item] = item_index.try_emplace(item, item_ids.size());
    if (new_item) item_ids.push_back(item);
    rows.push_back({li->second, ii->second, map.codes[code]});
  }
  VoteMatrix votes(leg_ids.size(), item_ids.size());
  for (std::size_t i = 0; i < leg_ids.size(); ++i) votes.roster[i].id = leg_ids[i];
  for (std::size_t j = 0; j < item_ids.size(); ++j) votes.item_info[j].id = item_ids[j];
  std::vector<char> seen(leg_ids.size() * item_ids.size(), 0);
  for (const auto& r : rows) {
    char& s = seen[r.i * item_ids.size() + r.j];
    if (s) throw FormatError(path + ": duplicate record for legislator '" + leg_ids[r.i] + "' on item '" + item_ids[r.j] + "'");
    s = 1;
    votes.set(r.i, r.j, r.v);
  }
  if (records) *records = rows.size();
  return votes;
}

/// Fills names and parties from a (legislator_id, name, party) CSV.
inline void read_legislator_info(const std::string& path, VoteMatrix& votes) {
  const auto lines = detail::read_lines(path);
  if (lines.empty()) throw FormatError(path + ": empty file (a header row is required)");
  const auto header = split_csv_record(lines[0]);
  const auto col = detail::locate_columns(header, {"legislator_id", "name", "party"}, path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < votes.legislators(); ++i) index[votes.roster[i].id] = i;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    if (trim(lines[n]).empty()) continue;
    const auto fields = split_csv_record(lines[n]);
    if (fields.size() != header.size())
      throw FormatError(path + ":" + std::to_string(n + 1) + ": expected " + std::to_string(header.size()) + " fields");
    const auto it = index.find(fields[col[0]]);
    if (it == index.end()) continue;
    votes.roster[it->second].name = fields[col[1]];
    votes.roster[it->second].party = fields[col[2]];
  }
}

struct LoadedVotes {
  VoteMatrix votes;
  FilterReport report;
};

/// Reads, maps cast codes and applies the filters.
inline LoadedVotes load_votes(const std::string& path, const CastCodeMap& map = {},
                              const std::optional<std::string>& legislators_path = std::nullopt) {
  std::size_t records = 0;
  VoteMatrix raw = read_vote_records(path, map, &records);
  if (legislators_path) read_legislator_info(*legislators_path, raw);
  FilterReport report;
  report.raw_legislators = raw.legislators();
  report.raw_items = raw.items();
  report.raw_records = records;
  auto [votes, final_report] = filter_votes(raw, report);
  return {std::move(votes), std::move(final_report)};
}

inline std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos && trim(text) == text) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

namespace detail {

inline std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace detail

/// Writes a load_votes-compatible file: Yea as 1, Nay as 6, Missing as 0.
inline void write_votes_csv(const VoteMatrix& votes, const fs::path& path) {
  auto out = detail::open_output(path);
  out << "legislator_id,item_id,cast_code\n";
  for (std::size_t i = 0; i < votes.legislators(); ++i)
    for (std::size_t j = 0; j < votes.items(); ++j) {
      const Vote v = votes.at(i, j);
      out << csv_field(votes.roster[i].id) << ',' << csv_field(votes.item_info[j].id) << ','
          << (v == Vote::Yea ? 1 : v == Vote::Nay ? 6 : 0) << '\n';
    }
}

inline void write_legislators_csv(const VoteMatrix& votes, const fs::path& path) {
  auto out = detail::open_output(path);
  out << "legislator_id,name,party\n";
  for (const auto& leg : votes.roster)
    out << csv_field(leg.id) << ',' << csv_field(leg.name) << ',' << csv_field(leg.party) << '\n';
}

inline void write_items_csv(const VoteMatrix& votes, const fs::path& path) {
  auto out = detail::open_output(path);
  out << "j,item_id,description\n";
  for (std::size_t j = 0; j < votes.items(); ++j)
    out << j + 1 << ',' << csv_field(votes.item_info[j].id) << ',' << csv_field(votes.item_info[j].description) << '\n';
}

struct Simulation {
  VoteMatrix votes;
  IdealPoints beta;               // aligned with votes.roster
  std::vector<ItemParams> items;  // aligned with votes.item_info
  FilterReport report;
  std::size_t attempts = 1;
};

/// Synthetic votes from the model: beta ~ N(0, 1), items from the prior, each
/// cell Yea with the link's response probability; cells are masked missing
/// with probability mask_rate. Legislators get party "A" (beta < 0) or "B".
/// The filters of load_votes are applied; a degenerate result is redrawn.
inline Simulation simulate_votes(std::size_t I, std::size_t J, const Hyperparams& hyper, std::uint64_t seed,
                                 double mask_rate = 0.0, Link link = Link::logit, std::size_t max_attempts = 20) {
  if (I < 2 || J < 2) throw std::invalid_argument("simulate_votes: need at least 2 legislators and 2 items");
  if (!(mask_rate >= 0.0 && mask_rate < 1.0)) throw std::invalid_argument("simulate_votes: mask_rate must lie in [0, 1)");
  hyper.validate();
  constexpr std::uint64_t kTagSimBeta = 0x51, kTagSimItem = 0x52, kTagSimCell = 0x53;
  for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
    VoteMatrix votes(I, J);
    IdealPoints beta(I);
    std::vector<ItemParams> items(J);
    for (std::size_t i = 0; i < I; ++i) {
      RngStream rng(seed, stream_id(kTagSimBeta, attempt, i));
      beta[i] = rng.normal();
      votes.roster[i].party = beta[i] < 0.0 ? "A" : "B";
    }
    for (std::size_t j = 0; j < J; ++j) {
      RngStream rng(seed, stream_id(kTagSimItem, attempt, j));
      items[j] = sample_prior_item(hyper, rng);
    }
    for (std::size_t i = 0; i < I; ++i)
      for (std::size_t j = 0; j < J; ++j) {
        RngStream rng(seed, stream_id(kTagSimCell, attempt, i * J + j));
        const double theta = response_probability(beta[i], items[j], link);
        const Vote v = rng.uniform() < theta ? Vote::Yea : Vote::Nay;
        const bool masked = mask_rate > 0.0 && rng.uniform() < mask_rate;
        votes.set(i, j, masked ? Vote::Missing : v);
      }
    try {
      auto [kept, report] = filter_votes(votes);
      if (kept.legislators() < 2 || kept.items() < 1) continue;
      Simulation sim;
      std::unordered_map<std::string, std::size_t> row, col;
      for (std::size_t i = 0; i < I; ++i) row[votes.roster[i].id] = i;
      for (std::size_t j = 0; j < J; ++j) col[votes.item_info[j].id] = j;
      for (const auto& leg : kept.roster) sim.beta.push_back(beta[row.at(leg.id)]);
      for (const auto& item : kept.item_info) sim.items.push_back(items[col.at(item.id)]);
      sim.votes = std::move(kept);
      sim.report = std::move(report);
      sim.attempts = attempt + 1;
      return sim;
    } catch (const FilterError&) {
    }
  }
  throw std::runtime_error("simulate_votes: every attempt was degenerate after filtering");
}

inline void write_truth_csv(const Simulation& sim, const fs::path& beta_path, const fs::path& items_path) {
  auto out = detail::open_output(beta_path);
  out << "legislator_id,beta\n";
  for (std::size_t i = 0; i < sim.beta.size(); ++i)
    out << csv_field(sim.votes.roster[i].id) << ',' << format_double(sim.beta[i]) << '\n';
  auto items = detail::open_output(items_path);
  items << "item_id,alpha1,alpha2,delta1,delta2,z\n";
  for (std::size_t j = 0; j < sim.items.size(); ++j) {
    const auto& p = sim.items[j];
    items << csv_field(sim.votes.item_info[j].id) << ',' << format_double(p.alpha[0]) << ','
          << format_double(p.alpha[1]) << ',' << format_double(p.delta[0]) << ',' << format_double(p.delta[1]) << ','
          << p.z << '\n';
  }
}

// ---------------------------------------------------------------------------
// Draw persistence

inline constexpr std::size_t kDrawBlock = 100;

/// Appends retained draws to beta.csv, alpha.csv, delta.csv, z.csv and
/// loglik.csv in blocks of 100, rewriting status.txt after each block.
class DrawWriter : public DrawSink {
 public:
  DrawWriter(const fs::path& dir, std::size_t legislators, std::size_t items) : dir_(dir), I_(legislators), J_(items) {
    fs::create_directories(dir_);
    open(beta_, "beta.csv", header_with("beta_", I_));
    open(alpha_, "alpha.csv", "iter,j,alpha1,alpha2");
    open(delta_, "delta.csv", "iter,j,delta1,delta2");
    open(z_, "z.csv", header_with("z_", J_));
    open(loglik_, "loglik.csv", header_with("total,per_legislator_", I_));
    write_status(false);
  }

  ~DrawWriter() override {
    if (!finished_) {
      try {
        finish(false);
      } catch (...) {
      }
    }
  }

  void append(std::uint64_t iteration, const ChainState& state, const std::vector<double>& per_legislator) override {
    const std::string it = std::to_string(iteration);
    std::string line = it;
    for (double b : state.beta) line += ',' + format_double(b);
    buf_beta_ += line + '\n';
    for (std::size_t j = 0; j < state.items.size(); ++j) {
      const auto& p = state.items[j];
      const std::string prefix = it + ',' + std::to_string(j + 1) + ',';
      buf_alpha_ += prefix + format_double(p.alpha[0]) + ',' + format_double(p.alpha[1]) + '\n';
      buf_delta_ += prefix + format_double(p.delta[0]) + ',' + format_double(p.delta[1]) + '\n';
    }
    line = it;
    for (const auto& p : state.items) line += ',' + std::to_string(p.z);
    buf_z_ += line + '\n';
    double total = 0.0;
    for (double v : per_legislator) total += v;
    line = it + ',' + format_double(total);
    for (double v : per_legislator) line += ',' + format_double(v);
    buf_loglik_ += line + '\n';
    ++pending_;
    if (pending_ == kDrawBlock) flush();
  }

  void finish(bool complete) override {
    flush();
    write_status(complete);
    finished_ = true;
  }

  std::size_t retained() const { return written_; }

 private:
  static std::string header_with(const std::string& prefix, std::size_t n) {
    std::string h = "iter";
    const auto comma = prefix.rfind(',');
    if (comma != std::string::npos) {
      h += ',' + prefix.substr(0, comma);
      for (std::size_t k = 1; k <= n; ++k) h += ',' + prefix.substr(comma + 1) + std::to_string(k);
    } else {
      for (std::size_t k = 1; k <= n; ++k) h += ',' + prefix + std::to_string(k);
    }
    return h;
  }

  void open(std::ofstream& out, const std::string& name, const std::string& header) {
    out.open(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << header << '\n';
    out.flush();
  }

  void flush() {
    if (pending_ == 0) return;
    beta_ << buf_beta_;
    alpha_ << buf_alpha_;
    delta_ << buf_delta_;
    z_ << buf_z_;
    loglik_ << buf_loglik_;
    for (auto* out : {&beta_, &alpha_, &delta_, &z_, &loglik_}) {
      out->flush();
      if (!*out) throw std::runtime_error("write failed in " + dir_.string());
    }
    buf_beta_.clear();
    buf_alpha_.clear();
    buf_delta_.clear();
    buf_z_.clear();
    buf_loglik_.clear();
    written_ += pending_;
    pending_ = 0;
    write_status(false);
  }

  void write_status(bool complete) {
    const auto tmp = dir_ / "status.txt.tmp";
    {
      auto out = detail::open_output(tmp);
      out << "retained = " << written_ << "\ncomplete = " << (complete ? "true" : "false") << '\n';
    }
    fs::rename(tmp, dir_ / "status.txt");
  }

  fs::path dir_;
  std::size_t I_, J_;
  std::ofstream beta_, alpha_, delta_, z_, loglik_;
  std::string buf_beta_, buf_alpha_, buf_delta_, buf_z_, buf_loglik_;
  std::size_t pending_ = 0;
  std::size_t written_ = 0;
  bool finished_ = false;
};

/// Writes a whole DrawStore to dir (same layout as DrawWriter).
inline void write_draws(const DrawStore& store, const fs::path& dir, bool complete = true) {
  DrawWriter writer(dir, store.I, store.J);
  ChainState state;
  state.beta.resize(store.I);
  state.items.resize(store.J);
  std::vector<double> per_leg(store.I);
  for (std::size_t s = 0; s < store.size(); ++s) {
    for (std::size_t i = 0; i < store.I; ++i) {
      state.beta[i] = store.beta_at(s, i);
      per_leg[i] = store.loglik_at(s, i);
    }
    for (std::size_t j = 0; j < store.J; ++j) state.items[j] = store.item_at(s, j);
    writer.append(store.iterations[s], state, per_leg);
  }
  writer.finish(complete);
}

struct DrawArchive {
  DrawStore draws;
  bool complete = false;     // the run finished its schedule
  bool truncated = false;    // rows were dropped back to the last complete block
  std::size_t declared = 0;  // retained count recorded in status.txt
};

namespace detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // complete rows only
  bool ragged_tail = false;
};

// Reads a CSV, dropping a final partial line (no newline or a short record).
inline CsvTable read_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing draws file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  CsvTable table;
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string::npos) {
      table.ragged_tail = true;
      break;
    }
    auto fields = split(std::string_view(text).substr(start, end - start), ',');
    start = end + 1;
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else if (fields.size() != table.header.size()) {
      table.ragged_tail = true;
      break;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw FormatError(path.string() + ": missing header row");
  return table;
}

inline void expect_header(const CsvTable& table, const std::vector<std::string>& expected, const fs::path& path) {
  for (std::size_t k = 0; k < std::max(expected.size(), table.header.size()); ++k) {
    const std::string got = k < table.header.size() ? table.header[k] : "<none>";
    const std::string want = k < expected.size() ? expected[k] : "<none>";
    if (got != want)
      throw FormatError(path.filename().string() + ": column " + std::to_string(k + 1) + " is '" + got +
                        "', expected '" + want + "'");
  }
}

inline std::size_t count_prefixed(const std::vector<std::string>& header, const std::string& prefix) {
  std::size_t n = 0;
  for (const auto& h : header)
    if (h.rfind(prefix, 0) == 0) ++n;
  return n;
}

inline std::vector<std::string> numbered(const std::vector<std::string>& lead, const std::string& prefix, std::size_t n) {
  auto out = lead;
  for (std::size_t k = 1; k <= n; ++k) out.push_back(prefix + std::to_string(k));
  return out;
}

}  // namespace detail

/// Reads a draws directory. Incomplete or damaged files are cut back to the
/// last complete block of 100 draws; a cleanly interrupted run keeps every
/// draw recorded in status.txt.
inline DrawArchive read_draws(const fs::path& dir) {
  using detail::read_table;
  const auto beta = read_table(dir / "beta.csv");
  const auto alpha = read_table(dir / "alpha.csv");
  const auto delta = read_table(dir / "delta.csv");
  const auto z = read_table(dir / "z.csv");
  const auto loglik = read_table(dir / "loglik.csv");
  const std::size_t I = detail::count_prefixed(beta.header, "beta_");
  const std::size_t J = detail::count_prefixed(z.header, "z_");
  detail::expect_header(beta, detail::numbered({"iter"}, "beta_", I), dir / "beta.csv");
  detail::expect_header(alpha, {"iter", "j", "alpha1", "alpha2"}, dir / "alpha.csv");
  detail::expect_header(delta, {"iter", "j", "delta1", "delta2"}, dir / "delta.csv");
  detail::expect_header(z, detail::numbered({"iter"}, "z_", J), dir / "z.csv");
  detail::expect_header(loglik, detail::numbered({"iter", "total"}, "per_legislator_", I), dir / "loglik.csv");

  DrawArchive archive;
  bool have_status = fs::exists(dir / "status.txt");
  if (have_status) {
    const auto status = KeyValueDoc::read_file((dir / "status.txt").string());
    archive.declared = parse_integer<std::size_t>(status.at("retained"));
    archive.complete = status.at("complete") == "true";
  }
  const std::size_t counts[] = {beta.rows.size(), J ? alpha.rows.size() / J : beta.rows.size(),
                                J ? delta.rows.size() / J : beta.rows.size(), z.rows.size(), loglik.rows.size()};
  const std::size_t available = *std::min_element(std::begin(counts), std::end(counts));
  const bool consistent = std::all_of(std::begin(counts), std::end(counts), [&](std::size_t c) { return c == available; }) &&
                          alpha.rows.size() == available * J && delta.rows.size() == available * J &&
                          !beta.ragged_tail && !alpha.ragged_tail && !delta.ragged_tail && !z.ragged_tail &&
                          !loglik.ragged_tail;
  std::size_t n = 0;
  if (have_status && consistent && available == archive.declared) {
    n = available;
  } else {
    n = (available / kDrawBlock) * kDrawBlock;
    archive.truncated = true;
    archive.complete = false;
  }

  DrawStore store(I, J);
  auto parse_it = [&](const std::string& text, const char* file, std::size_t row) {
    try {
      return parse_integer<std::uint64_t>(text);
    } catch (const FormatError&) {
      throw FormatError(std::string(file) + ": bad iteration at row " + std::to_string(row + 1));
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    const std::uint64_t it = parse_it(beta.rows[s][0], "beta.csv", s);
    if (parse_it(z.rows[s][0], "z.csv", s) != it || parse_it(loglik.rows[s][0], "loglik.csv", s) != it)
      throw FormatError("draw " + std::to_string(s + 1) + ": iteration numbers disagree across files");
    store.iterations.push_back(it);
    for (std::size_t i = 0; i < I; ++i) store.beta.push_back(parse_double(beta.rows[s][i + 1]));
    for (std::size_t j = 0; j < J; ++j) {
      const auto& ra = alpha.rows[s * J + j];
      const auto& rd = delta.rows[s * J + j];
      if (parse_it(ra[0], "alpha.csv", s * J + j) != it || parse_it(rd[0], "delta.csv", s * J + j) != it ||
          parse_integer<std::size_t>(ra[1]) != j + 1 || parse_integer<std::size_t>(rd[1]) != j + 1)
        throw FormatError("draw " + std::to_string(s + 1) + ": alpha/delta rows out of order for item " + std::to_string(j + 1));
      store.alpha.push_back(parse_double(ra[2]));
      store.alpha.push_back(parse_double(ra[3]));
      store.delta.push_back(parse_double(rd[2]));
      store.delta.push_back(parse_double(rd[3]));
      const int zz = parse_integer<int>(z.rows[s][j + 1]);
      if (zz != 1 && zz != -1) throw FormatError("z.csv: z must be 1 or -1");
      store.z.push_back(zz);
    }
    store.loglik_total.push_back(parse_double(loglik.rows[s][1]));
    for (std::size_t i = 0; i < I; ++i) store.loglik_legislator.push_back(parse_double(loglik.rows[s][i + 2]));
  }
  archive.draws = std::move(store);
  return archive;
}

/// Legislator ids recorded next to the draws (legislators.csv), in draw column order.
inline std::vector<std::string> read_roster_ids(const fs::path& path) {
  const auto lines = detail::read_lines(path.string());
  if (lines.empty()) throw FormatError(path.string() + ": empty file");
  const auto header = split_csv_record(lines[0]);
  const auto col = detail::locate_columns(header, {"legislator_id"}, path.string());
  std::vector<std::string> ids;
  for (std::size_t n = 1; n < lines.size(); ++n)
    if (!trim(lines[n]).empty()) ids.push_back(split_csv_record(lines[n])[col[0]]);
  return ids;
}

}  // namespace unfold

#endif  // UNFOLD_DATA_IO_HPP
