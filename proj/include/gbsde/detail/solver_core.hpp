#pragma once

#include <span>

#include "gbsde/solver.hpp"

namespace gbsde::detail {

/// Shared backward engine. The fixed-horizon solve is the special case of an
/// all-paths-run-to-the-end stopping rule, so both entry points funnel here
/// and agree bit for bit on degenerate stopping data.
struct CoreArgs {
  const GBSDEProblem* prob = nullptr;
  const TimeGrid* grid = nullptr;
  const PathBundle* bundle = nullptr;
  const SolverConfig* cfg = nullptr;

  /// Per-path stopping node; empty means every path runs to the last node.
  std::span<const std::uint32_t> tau = {};

  /// Per-path terminal values (k per path); empty means evaluate the
  /// problem's terminal condition at the stopped state.
  std::span<const double> xi = {};

  /// When set, the driver sees this iterate's (z, v) instead of the freshly
  /// estimated ones. Used by the outer Picard iteration.
  const DiscreteSolution* frozen_zv = nullptr;

  Exec exec = Exec::parallel;
};

DiscreteSolution solve_core(const CoreArgs& args);

/// Per-path realized increments of R after the variation cap. Step i of path
/// p contributes only while the running variation of R has not crossed the
/// cap.
double effective_dr(const PathBundle& bundle, std::size_t p, std::size_t i,
                    double variation_cap, double running_abs_before);

}  // namespace gbsde::detail
