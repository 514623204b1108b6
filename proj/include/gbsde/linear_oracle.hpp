#pragma once

// Ground truth for linear problems. A driver f = forcing + alpha y + beta.z
// + int gamma v dlambda admits the closed representation
//
//   Y_0 = E[ xi Gamma(0,T) + int_0^T Gamma(0,s) forcing ds
//            + int_0^T Gamma(0,s-) dR_s ]
//
// where Gamma is the stochastic exponential of alpha ds + beta dW
// + int gamma dpi. On a discrete path Gamma is a product of per-step
// factors, exact given the increments and nonnegative whenever every
// gamma_j >= -1. The solver never sees this formula, which is what makes
// the comparison meaningful.

#include <cstdint>
#include <span>
#include <vector>

#include "gbsde/generator.hpp"
#include "gbsde/grid.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/path_engine.hpp"

namespace gbsde {

/// Constant-in-time linear coefficients. beta has one entry per Brownian
/// channel, gamma one per atom.
struct LinearCoefficients {
  double alpha = 0.0;
  std::vector<double> beta;
  std::vector<double> gamma;
  double forcing = 0.0;

  bool operator==(const LinearCoefficients&) const = default;
};

/// Throws std::invalid_argument unless sizes match the model, every entry is
/// finite, and gamma_j >= -1 (the positivity threshold for Gamma).
void validate(const LinearCoefficients& c, const NoiseModel& model);

/// Gamma(t_from, t_to) on one path: left-to-right product of per-step
/// factors exp(alpha h + beta.dW - |beta|^2 h / 2 - sum_j gamma_j lambda_j h)
/// times (1 + gamma_j) once per counted jump. Gamma(t, t) = 1 exactly.
double doleans_gamma(const PathBundle& bundle, const TimeGrid& grid,
                     const LinearCoefficients& c, std::size_t path, std::size_t from,
                     std::size_t to);

/// Euler stepping of the Gamma dynamics on the same increments. Kept only as
/// a convergence cross-check of the closed product, which is exact.
double doleans_gamma_euler(const PathBundle& bundle, const TimeGrid& grid,
                           const LinearCoefficients& c, std::size_t path, std::size_t from,
                           std::size_t to);

/// Per-path realized value xi Gamma(0,N) + sum_i Gamma(0,i) (forcing h + dR_i).
/// The mean of this array is the Y_0 estimate; exposing the paths makes
/// superposition checks exact on a common bundle.
void linear_path_values(const LinearCoefficients& c, const TerminalFn& terminal,
                        const TimeGrid& grid, const PathBundle& bundle, std::span<double> out,
                        Exec exec = Exec::parallel);

struct OracleEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n_paths = 0;
  /// Smallest Gamma(0, i) seen over all paths and nodes; must be >= 0 when
  /// every gamma_j >= -1.
  double min_gamma = 0.0;
  /// Mean and standard error of Gamma(0, T); its expectation is exp(alpha T).
  double mean_gamma_horizon = 0.0;
  double se_gamma_horizon = 0.0;
};

/// Estimator on an existing bundle (common-random-number comparisons).
OracleEstimate linear_y0_on_bundle(const LinearCoefficients& c, const TerminalFn& terminal,
                                   const TimeGrid& grid, const PathBundle& bundle,
                                   Exec exec = Exec::parallel);

/// Self-contained oracle: simulates its own bundle from the seed, then
/// estimates. Callers pass a seed unrelated to the solver's bundle so the
/// two estimates carry independent noise.
OracleEstimate linear_y0(const LinearCoefficients& c, const TerminalFn& terminal,
                         const NoiseModel& model, const TimeGrid& grid, std::uint64_t seed,
                         std::size_t n_paths, Exec exec = Exec::parallel);

}  // namespace gbsde
