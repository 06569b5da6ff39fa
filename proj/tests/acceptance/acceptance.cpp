// Runs the shipped acceptance configs and prints one PASS/FAIL line per
// criterion. Usage: semidiag_acceptance <config dir> [criterion ...]
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "experiments.hpp"
#include "semidiag/errors.hpp"

namespace fs = std::filesystem;
using semidiag::cli::json;

namespace {

struct Criterion {
  int id;
  std::string title;
  double time_limit;  // seconds
  std::vector<std::string> configs;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "repeated diagonalization order law", 30, {"c01_repeated_order_law"}},
      {2, "exact finite-point conjugator", 60, {"c02a_finite_constant", "c02b_finite_xdep"}},
      {3, "exact conjugator at infinity", 60, {"c03_infinity"}},
      {4, "regular singular point", 10, {"c04_singular"}},
      {5, "Gaussian oscillatory oracle", 5, {"c05_gaussian_oracle"}},
      {6, "three quadratic-phase regimes", 30, {"c06_three_regimes"}},
      {7, "Gevrey and C^r decay laws", 120, {"c07a_gevrey_law", "c07b_cr_law"}},
      {8, "counterexample dichotomy", 120, {"c08a_constant_short", "c08b_constant_long", "c08c_gevrey", "c08d_cr"}},
      {9, "stable manifold", 30, {"c09_stable_manifold"}},
      {10, "property suites", 600, {"c10_properties"}},
  };
  return list;
}

json load(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return semidiag::cli::parse_config(ss.str(), p.string());
}

bool run_criterion(const Criterion& c, const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::vector<std::string> failed;
  for (const auto& name : c.configs) {
    try {
      const auto rep = semidiag::cli::run_experiment(load(dir / (name + ".json")));
      for (const auto& a : rep.assertions) {
        std::printf("    %s %s/%s = %.6g\n", a.pass ? "ok  " : "FAIL", name.c_str(), a.name.c_str(), a.value);
        if (!a.pass) failed.push_back(name + "/" + a.name);
      }
      for (const auto& n : rep.notes) std::printf("    note: %s\n", n.c_str());
    } catch (const std::exception& e) {
      std::printf("    FAIL %s raised: %s\n", name.c_str(), e.what());
      failed.push_back(name);
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > c.time_limit) failed.push_back("runtime");
  ok = failed.empty();
  std::printf("criterion %2d %s: %s (%.2f s of %.0f s)", c.id, c.title.c_str(), ok ? "PASS" : "FAIL", secs,
              c.time_limit);
  if (!ok) {
    std::printf(" failed:");
    for (const auto& f : failed) std::printf(" %s", f.c_str());
  }
  std::printf("\n");
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: " << argv[0] << " <config dir> [criterion ...]\n";
    return 2;
  }
  const fs::path dir = argv[1];
  std::vector<int> pick;
  for (int i = 2; i < argc; ++i) pick.push_back(std::stoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria()) {
    if (!pick.empty() && std::find(pick.begin(), pick.end(), c.id) == pick.end()) continue;
    if (!run_criterion(c, dir)) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
