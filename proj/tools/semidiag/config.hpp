#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semidiag/types.hpp"

namespace semidiag::cli {

using json = nlohmann::ordered_json;

/// Schema or syntax problem in a config file; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses config text, reporting syntax errors with line and column.
json parse_config(const std::string& text, const std::string& source);

/// Typed view of one JSON object. Every accessor records the value it
/// returns, defaults included, so that `echo()` is the fully materialized
/// section. `finish()` rejects keys that were never read.
class Section {
 public:
  Section(const json& in, std::string path);

  bool has(const std::string& key) const;
  double number(const std::string& key, double fallback);
  double number(const std::string& key);  // required
  int integer(const std::string& key, int fallback, int min_value = INT32_MIN);
  bool flag(const std::string& key, bool fallback);
  std::string text(const std::string& key, const std::string& fallback);
  std::string text(const std::string& key);
  cplx complex(const std::string& key, cplx fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback, bool positive = false);
  std::vector<cplx> complexes(const std::string& key, const std::vector<cplx>& fallback);
  /// Raw JSON value, required; recorded verbatim.
  json raw(const std::string& key);
  /// Nested object; a missing key gives an empty section.
  Section child(const std::string& key);
  /// Array of objects.
  std::vector<Section> children(const std::string& key);
  /// Stores a finished child's echo under `key`.
  void adopt(const std::string& key, const Section& child);
  void adopt(const std::string& key, const std::vector<Section>& list);

  void finish() const;
  const json& echo() const { return echo_; }
  const std::string& path() const { return path_; }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  const json* find(const std::string& key);

  json in_;
  json echo_ = json::object();
  std::string path_;
  std::vector<std::string> used_;
};

json complex_to_json(cplx z);

}  // namespace semidiag::cli
