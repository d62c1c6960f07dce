#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lyatensor/checks.hpp"
#include "lyatensor/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lyatensor::IoError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw lyatensor::IoError("read from '" + path + "' failed");
  return buf.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            bool seed_given, uint64_t seed, bool quiet) {
  using namespace lyatensor;

  RunConfig cfg;
  try {
    cfg = parse_config(read_file(config_path));
  } catch (const IoError& ex) {
    std::cerr << "lyatensor: " << ex.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& ex) {
    std::cerr << "lyatensor: config error: " << ex.what() << "\n";
    return kExitUsage;
  }
  if (seed_given) {
    cfg.seed = seed;
    for (auto& [k, v] : cfg.resolved)
      if (k == "seed") v = std::to_string(seed);
  }

  RunResult result;
  try {
    result = execute_run(cfg);
  } catch (const ConfigError& ex) {
    std::cerr << "lyatensor: config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& ex) {
    std::cerr << "lyatensor: invalid request: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const BlowUpError& ex) {
    std::cerr << "lyatensor: numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const NumericFailure& ex) {
    std::cerr << "lyatensor: numeric failure: " << ex.what() << "\n";
    return kExitNumeric;
  }

  try {
    std::filesystem::create_directories(out_dir);
    write_text_file((std::filesystem::path(out_dir) / "report.json").string(),
                    result.report.dump(2) + "\n");
    write_text_file((std::filesystem::path(out_dir) / "series.csv").string(),
                    result.series.to_csv());
  } catch (const std::exception& ex) {
    std::cerr << "lyatensor: I/O failure: " << ex.what() << "\n";
    return kExitIo;
  }

  if (!quiet) {
    std::cout << result.summary << "\n";
    std::cout << "artifacts: " << out_dir << "/report.json, " << out_dir
              << "/series.csv\n";
  }
  return result.exit_code;
}

int cmd_systems() {
  using namespace lyatensor;
  for (const SystemSpec& spec : system_registry()) {
    std::cout << spec.name << " (dim " << spec.dim << "): " << spec.description << "\n";
    for (const ParamSpec& p : spec.params)
      std::cout << "  param " << p.name << " = " << format_number(p.default_value)
                << "  " << p.description << "\n";
    std::cout << "  reference state = [";
    for (size_t i = 0; i < spec.reference_state.size(); ++i)
      std::cout << (i ? ", " : "") << format_number(spec.reference_state[i]);
    std::cout << "]\n";
    std::cout << "  default window = [" << format_number(spec.default_window.first)
              << ", " << format_number(spec.default_window.second) << "]"
              << ", horizon = " << format_number(spec.default_horizon)
              << ", round-trip window = " << format_number(spec.roundtrip_window)
              << "\n";
  }
  return lyatensor::kExitOk;
}

int cmd_check(bool quiet) {
  using namespace lyatensor;
  const std::vector<CheckResult> results = run_builtin_checks();
  int failed = 0;
  for (const CheckResult& r : results) {
    if (!r.pass) ++failed;
    if (!quiet || !r.pass)
      std::cout << (r.pass ? "ok   " : "FAIL ") << r.name << ": " << r.detail << "\n";
  }
  std::cout << (failed == 0 ? "all " : "") << results.size() - failed << "/"
            << results.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"covariant Lyapunov tensor toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  uint64_t seed = 0;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "execute one analysis from a config file");
  run->add_option("config", config_path, "run configuration file")->required();
  run->add_option("--out", out_dir, "output directory for report.json / series.csv");
  CLI::Option* seed_opt = run->add_option("--seed", seed, "override the config seed");
  run->add_flag("--quiet", quiet, "suppress the stdout summary");

  CLI::App* systems = app.add_subcommand("systems", "list the built-in system registry");
  CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");
  check->add_flag("--quiet", quiet, "print failing checks only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : lyatensor::kExitUsage;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, seed_opt->count() > 0, seed, quiet);
    if (systems->parsed()) return cmd_systems();
    if (check->parsed()) return cmd_check(quiet);
  } catch (const std::exception& ex) {
    std::cerr << "lyatensor: " << ex.what() << "\n";
    return lyatensor::kExitNumeric;
  }
  return lyatensor::kExitUsage;
}
