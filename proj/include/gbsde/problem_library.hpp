#pragma once

#include <string>

#include "gbsde/generator.hpp"

namespace gbsde {

/// Terminal conditions available from configuration. Bases read the forward
/// state: w is the first Brownian level, n the first atom count, b the first
/// extra-channel level; exp_neg_t is exp(-t) of the evaluation time, which at
/// a random horizon is the stopping time.
enum class TerminalBase { zero, w, n, b, abs_w, exp_neg_t };

struct TerminalSpec {
  TerminalBase base = TerminalBase::zero;
  double scale = 1.0;
  TerminalBase base2 = TerminalBase::zero;
  double scale2 = 0.0;
  double offset = 0.0;

  bool operator==(const TerminalSpec&) const = default;
};

/// Named problem constructors. Drivers:
///   zero            f = 0
///   constant_driver f = driver_value
///   linear          f = f0 + alpha y + beta . z + integral gamma v dlambda
///   monotone_cubic  f = -y^3 (monotone with mu = 0, not Lipschitz in y)
///   jump_kernel     f = kernel_scale * integral sin(v) dlambda
struct ProblemParams {
  std::string name = "zero";
  double p = 2.0;
  double alpha = 0.0;
  double beta = 0.0;          // broadcast over Brownian coordinates
  double gamma = 0.0;         // broadcast over atoms
  double f0 = 0.0;            // constant forcing level of the linear driver
  double driver_value = 1.0;  // constant_driver level
  double kernel_scale = 0.5;  // jump_kernel slope
  TerminalSpec terminal;

  bool operator==(const ProblemParams&) const = default;
};

TerminalFn make_terminal(const TerminalSpec& spec, const NoiseModel& model);

GBSDEProblem make_problem(const ProblemParams& params, const NoiseModel& model);

bool is_known_problem(const std::string& name);

}  // namespace gbsde
