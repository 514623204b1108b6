#pragma once

// Verb dispatch behind the CLI. Each verb builds its objects from the
// config, runs, and writes CSV reports under the configured output
// directory, every file ending in the config-hash trailer. With check mode
// on, the verb also asserts its own consistency conditions and fails the
// process instead of merely reporting.

#include <string>

#include "gbsde/config.hpp"

namespace gbsde {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCheck = 4;

/// Runs one verb: simulate, solve, oracle, compare, estimate,
/// random-horizon, or convergence. Returns the process exit code and prints
/// failures to stderr.
int run_verb(const std::string& verb, const ExperimentConfig& cfg, bool check);

}  // namespace gbsde
