#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "experiments.hpp"

using namespace semidiag::cli;

namespace {

json load_config(const std::string& name) {
  std::ifstream in(std::string(SEMIDIAG_CONFIG_DIR) + "/" + name);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), name);
}

}  // namespace

TEST(Config, MalformedJsonReportsLineAndColumn) {
  try {
    parse_config("{\n  \"kind\": \"osc_cr\",,\n}", "bad.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.json:2:"), std::string::npos) << e.what();
  }
}

TEST(Config, DefaultsAreMaterialized) {
  const Report rep = run_experiment(json::parse(R"({"kind": "osc_gevrey"})"), {1, true});
  EXPECT_EQ(rep.config["gevrey_theta"], 1.0);
  EXPECT_EQ(rep.config["h_grid"].size(), 5u);
  EXPECT_EQ(rep.config["name"], "osc_gevrey");
  EXPECT_TRUE(rep.config["assert"].contains("p_tol"));
}

TEST(Config, UnknownKeysAndKindsAreRejected) {
  EXPECT_THROW(run_experiment(json::parse(R"({"kind": "osc_gevrey", "gevrey_thet": 2})"), {1, true}), ConfigError);
  EXPECT_THROW(run_experiment(json::parse(R"({"kind": "nope"})"), {1, true}), ConfigError);
  EXPECT_THROW(run_experiment(json::parse(R"({"kind": "osc_cr", "h_grid": [0.1, -0.1]})"), {1, true}), ConfigError);
  EXPECT_THROW(run_experiment(json::parse(R"({"kind": "exact_finite", "system": {"n": 2, "entries": [["x +", "0"], ["0", "1"]]}})"),
                              {1, true}),
               ConfigError);
}

TEST(Config, EchoedConfigReproducesTheRun) {
  const Report a = run_experiment(load_config("c05_gaussian_oracle.json"));
  const Report b = run_experiment(a.config);
  EXPECT_EQ(a.metrics.dump(), b.metrics.dump());
  EXPECT_EQ(a.config.dump(), b.config.dump());
}

TEST(Config, ParallelSweepMatchesSequential) {
  const json cfg = load_config("c02b_finite_xdep.json");
  const Report seq = run_experiment(cfg, {1, false});
  const Report par = run_experiment(cfg, {2, false});
  EXPECT_EQ(seq.metrics.dump(), par.metrics.dump());
  EXPECT_TRUE(seq.passed());
}

TEST(Report, CounterexampleReportsUnbounded) {
  const Report rep = run_experiment(load_config("c08b_constant_long.json"));
  EXPECT_TRUE(rep.metrics["unbounded"].get<bool>());
  EXPECT_TRUE(rep.passed());
  EXPECT_TRUE(rep.artifacts.count("counterexample.csv"));
  const json j = rep.to_json();
  EXPECT_EQ(j["version"], SEMIDIAG_VERSION);
  EXPECT_TRUE(j["pass"].get<bool>());
}
