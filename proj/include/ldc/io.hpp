/**
 * Copyright 2026 the ldc authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file io.hpp
 * @brief Binary matrix files, text run configuration, and number formatting.
 *
 * Matrix file layout (all integers little-endian):
 *   bytes 0-3   magic "LDCM"
 *   bytes 4-5   uint16 format version (currently 1)
 *   bytes 6-9   uint32 row count
 *   bytes 10-13 uint32 column count
 *   bytes 14-   rows*cols float64 values, row-major
 *
 * Run configuration files are line-oriented `key = value` pairs.  A line
 * `[name]` starts a section; keys inside it are addressed as "name.key".
 * '#' starts a comment, blank lines are ignored, duplicate keys are errors.
 */

#ifndef LDC_IO_HPP
#define LDC_IO_HPP

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

static_assert(std::endian::native == std::endian::little,
              "matrix file IO assumes a little-endian host");
static_assert(sizeof(double) == 8, "matrix file IO assumes 64-bit doubles");

inline constexpr char kMatrixMagic[4] = {'L', 'D', 'C', 'M'};
inline constexpr std::uint16_t kMatrixVersion = 1;

/** Formats a double with 17 significant digits (round-trippable). */
inline std::string format_full(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return std::string(buf);
}

/** Writes @p m to @p path in the binary matrix format. */
inline void write_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("write_matrix: cannot open " + path);
  const std::uint16_t version = kMatrixVersion;
  const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(kMatrixMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  // Eigen stores column-major; emit row by row for the row-major layout.
  std::vector<double> row(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw IoError("write_matrix: write failed for " + path);
}

/** Reads a matrix written by write_matrix, validating the header. */
inline Matrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_matrix: cannot open " + path);
  char magic[4];
  std::uint16_t version = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  if (!in) throw IoError("read_matrix: truncated header in " + path);
  if (std::memcmp(magic, kMatrixMagic, 4) != 0) {
    throw IoError("read_matrix: bad magic in " + path);
  }
  if (version != kMatrixVersion) {
    throw IoError("read_matrix: unsupported version " +
                  std::to_string(version) + " in " + path);
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::vector<double> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    if (!in) throw IoError("read_matrix: truncated payload in " + path);
    for (std::uint32_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          row[c];
    }
  }
  // Reject trailing bytes so size mismatches cannot pass silently.
  char extra;
  in.read(&extra, 1);
  if (!in.eof()) throw IoError("read_matrix: trailing bytes in " + path);
  return m;
}

/** Writes one label per line to the sidecar file `path + ".labels"`. */
inline void write_labels(const std::string& matrix_path,
                         const std::vector<std::string>& labels) {
  const std::string path = matrix_path + ".labels";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("write_labels: cannot open " + path);
  for (const auto& label : labels) out << label << '\n';
  if (!out) throw IoError("write_labels: write failed for " + path);
}

/** Reads the label sidecar of a matrix file. */
inline std::vector<std::string> read_labels(const std::string& matrix_path) {
  const std::string path = matrix_path + ".labels";
  std::ifstream in(path);
  if (!in) throw IoError("read_labels: cannot open " + path);
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) labels.push_back(line);
  return labels;
}

namespace detail {

inline std::string strip(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline bool valid_key(const std::string& key) {
  if (key.empty()) return false;
  for (char ch : key) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' ||
          ch == '.')) {
      return false;
    }
  }
  return true;
}

}  // namespace detail

/**
 * Parsed run configuration.  Lookups are typed; unknown-key validation is
 * done by the consumer through validate_keys so each tool can declare its
 * own vocabulary.
 */
class RunConfig {
 public:
  RunConfig() = default;

  /** Parses configuration text; @p origin labels error messages. */
  static RunConfig parse_string(const std::string& text,
                                const std::string& origin = "<string>") {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      // Drop comments, then surrounding whitespace.
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::string body = detail::strip(line);
      if (body.empty()) continue;
      const std::string where =
          origin + ":" + std::to_string(lineno);
      if (body.front() == '[') {
        if (body.back() != ']' || body.size() < 3) {
          throw ConfigError(where + ": malformed section header '" + body +
                            "'");
        }
        section = detail::strip(body.substr(1, body.size() - 2));
        if (!detail::valid_key(section)) {
          throw ConfigError(where + ": invalid section name '" + section +
                            "'");
        }
        continue;
      }
      std::size_t eq = body.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(where + ": expected 'key = value', got '" + body +
                          "'");
      }
      std::string key = detail::strip(body.substr(0, eq));
      std::string value = detail::strip(body.substr(eq + 1));
      if (!detail::valid_key(key)) {
        throw ConfigError(where + ": invalid key '" + key + "'");
      }
      if (!section.empty()) key = section + "." + key;
      if (cfg.values_.count(key) != 0) {
        throw ConfigError(where + ": duplicate key '" + key + "'");
      }
      cfg.values_[key] = value;
    }
    return cfg;
  }

  /** Parses a configuration file. */
  static RunConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("RunConfig: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /** All keys in lexicographic order. */
  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [key, value] : values_) out.push_back(key);
    return out;
  }

  const std::string& get_string(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw ConfigError("RunConfig: missing key '" + key + "'");
    }
    return it->second;
  }

  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  long long get_int(const std::string& key) const {
    return parse_int(key, get_string(key));
  }

  long long get_int_or(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string& raw = get_string(key);
    try {
      std::size_t used = 0;
      std::uint64_t value = std::stoull(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("RunConfig: key '" + key +
                        "' is not an unsigned integer: '" + raw + "'");
    }
  }

  double get_double(const std::string& key) const {
    return parse_double(key, get_string(key));
  }

  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  /** Comma-separated list of doubles. */
  std::vector<double> get_double_list(const std::string& key) const {
    const std::string& raw = get_string(key);
    std::vector<double> out;
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
      out.push_back(parse_double(key, detail::strip(item)));
    }
    if (out.empty()) {
      throw ConfigError("RunConfig: key '" + key + "' has an empty list");
    }
    return out;
  }

  /**
   * Rejects any key not in @p allowed.  Keys under a section listed in
   * @p allowed_sections (e.g. per-run event blocks) are accepted wholesale.
   */
  void validate_keys(const std::set<std::string>& allowed,
                     const std::set<std::string>& allowed_sections = {}) const {
    for (const auto& [key, value] : values_) {
      if (allowed.count(key) != 0) continue;
      std::size_t dot = key.find('.');
      if (dot != std::string::npos &&
          allowed_sections.count(key.substr(0, dot)) != 0) {
        continue;
      }
      throw ConfigError("RunConfig: unknown key '" + key + "'");
    }
  }

 private:
  static long long parse_int(const std::string& key, const std::string& raw) {
    try {
      std::size_t used = 0;
      long long value = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("RunConfig: key '" + key + "' is not an integer: '" +
                        raw + "'");
    }
  }

  static double parse_double(const std::string& key, const std::string& raw) {
    try {
      std::size_t used = 0;
      double value = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return value;
    } catch (const std::exception&) {
      throw ConfigError("RunConfig: key '" + key + "' is not a number: '" +
                        raw + "'");
    }
  }

  std::map<std::string, std::string> values_;
};

/** Writes raw text to @p path, throwing IoError on failure. */
inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("write_text: cannot open " + path);
  out << text;
  if (!out) throw IoError("write_text: write failed for " + path);
}

}  // namespace ldc

#endif  // LDC_IO_HPP
