#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace gbsde {

/// Configuration could not be parsed or validated. Carries line-numbered
/// diagnostics for the CLI to print.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> diagnostics)
      : std::runtime_error(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  static std::string join(const std::vector<std::string>& d) {
    std::string s = "config error";
    for (const auto& line : d) {
      s += "\n  ";
      s += line;
    }
    return s;
  }
  std::vector<std::string> diagnostics_;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generator returned a non-finite value; the problem spec is invalid.
class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inner fixed-point iteration failed to settle at one time step.
class PicardDivergedError : public std::runtime_error {
 public:
  PicardDivergedError(std::size_t node, double time, double contraction_estimate)
      : std::runtime_error("picard iteration diverged at node " + std::to_string(node) +
                           " (t = " + std::to_string(time) +
                           "), contraction estimate " + std::to_string(contraction_estimate)),
        node_(node),
        time_(time),
        contraction_(contraction_estimate) {}

  std::size_t node() const { return node_; }
  double time() const { return time_; }
  double contraction_estimate() const { return contraction_; }

 private:
  std::size_t node_;
  double time_;
  double contraction_;
};

/// Least-squares projection became rank deficient.
class RegressionSingularError : public std::runtime_error {
 public:
  RegressionSingularError(std::size_t node, double condition_ratio)
      : std::runtime_error("regression basis is rank deficient at node " +
                           std::to_string(node) + " (pivot ratio " +
                           std::to_string(condition_ratio) + ")"),
        node_(node),
        condition_ratio_(condition_ratio) {}

  std::size_t node() const { return node_; }
  double condition_ratio() const { return condition_ratio_; }

 private:
  std::size_t node_;
  double condition_ratio_;
};

/// An acceptance assertion requested via --check failed.
class CheckFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gbsde
