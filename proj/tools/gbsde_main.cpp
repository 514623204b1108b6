// Command-line shell: flag parsing and config loading only; everything real
// lives in the library. Exit codes: 0 success, 2 configuration or usage
// problems, 3 solver failures, 4 check failures.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "gbsde/config.hpp"
#include "gbsde/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gbsde: backward SDEs with jumps, solved and cross-examined"};
  std::string verb;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::uint64_t paths = 0;
  bool check = false;

  app.add_option("verb", verb,
                 "one of: simulate, solve, oracle, compare, estimate, "
                 "random-horizon, convergence")
      ->required();
  app.add_option("--config", config_path, "experiment config file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override run.seed");
  auto* paths_opt = app.add_option("--paths", paths, "override run.paths");
  auto* out_opt = app.add_option("--out", out_dir, "override run.out report directory");
  app.add_flag("--check", check, "assert verb-specific consistency conditions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? gbsde::kExitOk : gbsde::kExitConfig;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot read config file " << config_path << '\n';
    return gbsde::kExitConfig;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  gbsde::ParseResult parsed = gbsde::parse_config(buf.str());
  if (!parsed.ok()) {
    for (const gbsde::Diagnostic& d : parsed.diagnostics) {
      if (d.line)
        std::cerr << config_path << ":" << d.line << ": " << d.message << '\n';
      else
        std::cerr << config_path << ": " << d.message << '\n';
    }
    return gbsde::kExitConfig;
  }

  gbsde::ExperimentConfig cfg = *parsed.config;
  if (seed_opt->count()) cfg.run.seed = seed;
  if (paths_opt->count()) cfg.run.paths = static_cast<std::size_t>(paths);
  if (out_opt->count()) cfg.run.out = out_dir;

  return gbsde::run_verb(verb, cfg, check);
}
