#pragma once

// Experiment configuration: a line-oriented key = value grammar with
// [section] headers, no nesting. Every field has a default; parsing a file
// fills the explicit keys and validation reports everything wrong at once
// with line numbers. print_config emits the canonical full form, and
// parse(print(parse(text))) == parse(text), which is what makes the config
// hash on report files meaningful.

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gbsde/linear_oracle.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/path_engine.hpp"
#include "gbsde/problem_library.hpp"
#include "gbsde/random_horizon.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

/// One jump atom line: mark components and intensity.
struct AtomLine {
  std::vector<double> mark;
  double intensity = 1.0;

  bool operator==(const AtomLine&) const = default;
};

struct NoiseConfig {
  std::size_t brownian_dim = 1;
  std::size_t extra_dim = 0;
  std::vector<AtomLine> atoms;
  RSpec::Mode r_mode = RSpec::Mode::zero;
  double r_rate = 0.0;
  std::vector<std::pair<double, double>> r_jumps;  // (time, size)

  bool operator==(const NoiseConfig&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  Exec exec = Exec::parallel;
  std::string out = "reports";

  bool operator==(const RunConfig&) const = default;
};

struct CompareConfig {
  double r_scale_low = 1.0;
  double r_scale_high = 1.0;

  bool operator==(const CompareConfig&) const = default;
};

struct StoppingConfig {
  double rho = 0.0;
  std::size_t coord = 0;  // state coordinate the interval domain watches
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> caps;  // horizon-extension sweep; empty = single solve

  bool operator==(const StoppingConfig&) const = default;
};

struct ExperimentConfig {
  double horizon = 0.0;
  std::size_t steps = 0;
  NoiseConfig noise;
  ProblemParams problem;
  std::optional<ProblemParams> problem2;  // comparison partner
  SolverConfig solver;
  LinearCoefficients oracle;
  CompareConfig compare;
  StoppingConfig stopping;
  std::vector<std::size_t> convergence_steps;
  RunConfig run;

  bool operator==(const ExperimentConfig&) const = default;
};

struct Diagnostic {
  std::size_t line = 0;  // 0 = file level
  std::string message;
};

struct ParseResult {
  std::optional<ExperimentConfig> config;  // set iff diagnostics empty
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

ParseResult parse_config(std::string_view text);

/// Canonical full-form text: every field, fixed section and key order,
/// shortest round-trip numbers.
std::string print_config(const ExperimentConfig& cfg);

/// FNV-1a over the canonical text; stamped on every report file.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Builders from the raw blocks. Deep invariants (mark distinctness, jump
// time ranges) surface here as ConfigError with collected messages.
NoiseModel build_noise(const NoiseConfig& noise);
TimeGrid build_grid(const ExperimentConfig& cfg);
StoppingSpec build_stopping(const StoppingConfig& stopping);

}  // namespace gbsde
