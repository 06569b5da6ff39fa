#pragma once

#include <map>
#include <string>
#include <vector>

#include "config.hpp"

namespace semidiag::cli {

struct Assertion {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "within", "=="
  double bound = 0.0;
  double target = 0.0;   // only for "within" and "=="
  bool pass = false;
};

struct Report {
  json config;
  json metrics = json::object();
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  /// File name -> contents, written next to report.json.
  std::map<std::string, std::string> artifacts;
  double runtime_seconds = 0.0;

  bool passed() const;
  json to_json() const;
};

struct RunOptions {
  int jobs = 1;
  /// Parse and materialize the config without computing anything.
  bool dry = false;
};

std::vector<std::string> experiment_kinds();

/// Throws ConfigError for schema problems; library errors propagate.
Report run_experiment(const json& config, const RunOptions& opt = {});

}  // namespace semidiag::cli
