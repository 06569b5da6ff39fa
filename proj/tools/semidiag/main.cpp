#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "experiments.hpp"
#include "semidiag/builtins.hpp"
#include "semidiag/errors.hpp"

namespace fs = std::filesystem;
using namespace semidiag;
using namespace semidiag::cli;

namespace {

enum Exit { kPass = 0, kAssertionFailed = 1, kConfigError = 2, kNumerical = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("semidiag");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("SEMIDIAG_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::info);
  if (level != "error" && level != "info" && level != "debug")
    spdlog::warn("SEMIDIAG_LOG='{}' not recognised, using info", level);
}

json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kConfigError;
  } catch (const InputError& e) {
    spdlog::error("input: {}", e.what());
    return kConfigError;
  } catch (const ConvergenceFailure& e) {
    spdlog::error("numerical failure: {} (estimate {})", e.what(), e.estimate());
    return kNumerical;
  } catch (const NumericalError& e) {
    spdlog::error("numerical failure: {}", e.what());
    return kNumerical;
  }
}

int cmd_run(const std::string& path, std::string out_dir, int jobs) {
  const json config = load(path);
  RunOptions opt;
  opt.jobs = jobs;
  spdlog::info("running {}", path);
  const Report rep = run_experiment(config, opt);
  if (out_dir.empty()) out_dir = rep.config["output"]["dir"].get<std::string>();
  if (out_dir.empty()) out_dir = "out/" + rep.config["name"].get<std::string>();
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  for (const auto& [name, content] : rep.artifacts) write_file(dir / name, content);
  json j = rep.to_json();
  write_file(dir / "report.json", j.dump(2) + "\n");

  for (const auto& a : rep.assertions) {
    const std::string bound = a.relation == "within" ? fmt::format("{:g} +/- {:g}", a.target, a.bound)
                              : a.relation == "=="   ? fmt::format("{:g}", a.target)
                                                     : fmt::format("{:g}", a.bound);
    std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << ": " << a.value << ' ' << a.relation << ' ' << bound
              << '\n';
  }
  for (const auto& n : rep.notes) spdlog::info("note: {}", n);
  spdlog::info("report written to {} ({:.2f} s)", (dir / "report.json").string(), rep.runtime_seconds);
  return rep.passed() ? kPass : kAssertionFailed;
}

int cmd_validate(const std::string& path) {
  RunOptions opt;
  opt.dry = true;
  const Report rep = run_experiment(load(path), opt);
  std::cout << rep.config.dump(2) << '\n';
  return kPass;
}

int cmd_list(const std::string& filter) {
  const auto items = find_builtins(filter);
  size_t w_name = 4, w_kind = 4, w_args = 4;
  for (const auto& b : items) {
    w_name = std::max(w_name, b.name.size());
    w_kind = std::max(w_kind, b.kind.size());
    w_args = std::max(w_args, b.args.size());
  }
  auto pad = [](const std::string& s, size_t w) { return s + std::string(w - s.size() + 2, ' '); };
  std::cout << pad("name", w_name) << pad("kind", w_kind) << pad("args", w_args) << "description\n";
  for (const auto& b : items)
    std::cout << pad(b.name, w_name) << pad(b.kind, w_kind) << pad(b.args, w_args) << b.description << '\n';
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Block-diagonalizing conjugators and oscillatory-integral experiments"};
  app.set_version_flag("--version", SEMIDIAG_VERSION);
  app.require_subcommand(1);

  std::string config, out_dir, filter;
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run an experiment config and write report.json plus data files");
  run->add_option("config", config, "experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "parallel solves across the h grid")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  validate->add_option("config", config, "experiment config (JSON)")->required();

  auto* list = app.add_subcommand("list-builtins", "List builtin systems, symbols and vector fields");
  list->add_option("filter", filter, "substring filter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  if (*run) return guarded([&] { return cmd_run(config, out_dir, jobs); });
  if (*validate) return guarded([&] { return cmd_validate(config); });
  return cmd_list(filter);
}
