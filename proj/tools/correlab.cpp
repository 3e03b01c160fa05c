// correlab run <config> [--outdir DIR] [--workers K] [--verbose]
// correlab validate <config>
// correlab plot <record.json> --kind <table>
//
// Exit codes: 0 all checks passed, 1 a check failed or the task aborted,
// 2 invalid config or usage.

#include "correlab/cli/config.hpp"
#include "correlab/cli/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw correlab::cli::ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_outdir(const correlab::cli::ExperimentConfig& c) {
  if (!c.outdir.empty()) return c.outdir;
  if (const char* env = std::getenv("CORRELAB_OUTDIR"); env && *env) return env;
  return "results";
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = correlab::cli;
  CLI::App app{"correlab: thermal correlators, Lieb-Robinson scans and contour checks on small spin chains"};
  app.require_subcommand(1);
  app.set_version_flag("--version", CORRELAB_VERSION);

  std::string config_path, outdir, record_path, kind;
  std::size_t workers = 0;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "Run the task named in a config file");
  run->add_option("config", config_path, "Config file (YAML)")->required()->check(CLI::ExistingFile);
  run->add_option("--outdir", outdir, "Output directory (default: output.dir, $CORRELAB_OUTDIR, ./results)");
  run->add_option("--workers", workers, "Worker threads (default: run.workers or available cores)");
  run->add_flag("--verbose,-v", verbose, "Progress on stderr");

  auto* validate = app.add_subcommand("validate", "Parse and validate a config, print its canonical form");
  validate->add_option("config", config_path, "Config file (YAML)")->required()->check(CLI::ExistingFile);

  auto* plot = app.add_subcommand("plot", "Emit plot CSV and gnuplot script for one table of a record");
  plot->add_option("record", record_path, "record.json")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", kind, "Table name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*validate) {
      const auto c = cli::parse_config(read_file(config_path));
      std::cout << "# hash " << cli::config_hash(c) << '\n' << cli::serialize(c);
      return 0;
    }
    if (*plot) {
      std::ifstream in(record_path);
      const auto record = cli::json::parse(in);
      const auto dir = std::filesystem::path(record_path).parent_path();
      for (const auto& p : cli::emit_plotdata(record, kind, dir.empty() ? "." : dir)) std::cout << p.string() << '\n';
      return 0;
    }
    const auto c = cli::parse_config(read_file(config_path));
    cli::RunOptions opt;
    opt.workers = workers;
    opt.log = verbose ? &std::cerr : nullptr;
    const auto result = cli::execute(c, opt);
    const auto dir = cli::write_outputs(result, outdir.empty() ? default_outdir(c) : outdir);
    for (const auto& ch : result.checks)
      std::cout << (ch.passed ? "[PASS] " : "[FAIL] ") << ch.name << ": " << ch.detail << '\n';
    if (!result.error.empty()) std::cout << "[FAIL] task aborted: " << result.error << '\n';
    std::cout << dir.string() << '\n';
    return result.passed() ? 0 : 1;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return *plot ? 2 : 1;
  }
}
