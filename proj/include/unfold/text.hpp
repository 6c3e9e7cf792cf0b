#ifndef UNFOLD_TEXT_HPP
#define UNFOLD_TEXT_HPP

// Small text helpers shared by the file formats: exact decimal formatting,
// strict number parsing, CSV splitting and "key = value" documents.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace unfold {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (text.empty() || result.ec != std::errc() || result.ptr != end)
    throw FormatError("not a number: '" + std::string(text) + "'");
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  text = trim(text);
  Int value{};
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size())
    throw FormatError("not an integer: '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string> split(std::string_view text, char separator) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(separator, start);
    parts.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline std::vector<double> parse_double_list(std::string_view text) {
  std::vector<double> values;
  for (const auto& part : split(text, ',')) values.push_back(parse_double(part));
  return values;
}

inline std::string join_doubles(const std::vector<double>& values, std::string_view separator = ", ") {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += separator;
    out += format_double(values[k]);
  }
  return out;
}

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_record(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw FormatError("unterminated quoted field");
  fields.emplace_back(trim(field));
  return fields;
}

/// Ordered "key = value" document; '#' starts a comment line.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text, const std::string& origin = "<text>") {
    KeyValueDoc doc;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      const auto line = trim(text.substr(start, end - start));
      ++line_no;
      start = end + 1;
      if (line.empty() || line.front() == '#') {
        if (end == text.size()) break;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw FormatError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw FormatError(origin + ":" + std::to_string(line_no) + ": empty key");
      if (doc.contains(key))
        throw FormatError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
      doc.set(key, std::string(trim(line.substr(eq + 1))));
      if (end == text.size()) break;
    }
    return doc;
  }

  static KeyValueDoc read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
  }

  bool contains(const std::string& key) const {
    return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
  }

  const std::string& at(const std::string& key) const {
    for (const auto& e : entries_)
      if (e.first == key) return e.second;
    throw FormatError("missing key '" + key + "'");
  }

  void set(const std::string& key, std::string value) {
    for (auto& e : entries_)
      if (e.first == key) {
        e.second = std::move(value);
        return;
      }
    entries_.emplace_back(key, std::move(value));
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string out;
    for (const auto& [key, value] : entries_) out += key + " = " + value + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace unfold

#endif  // UNFOLD_TEXT_HPP
