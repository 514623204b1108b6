#pragma once

// Random terminal times. The stopping time is detected on grid nodes as the
// first exit of the forward state from a domain, capped by the grid horizon.
// At and after the stopped node the solution is frozen to the terminal value
// with Z = V = dM = 0, and the driver and R increments are cut there, which
// is the discrete form of the indicator on [0, tau]. Unbounded horizons are
// approached by re-solving under growing caps with shared noise prefixes and
// watching the Cauchy decrements of the restrictions shrink.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gbsde/generator.hpp"
#include "gbsde/grid.hpp"
#include "gbsde/norms.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/path_engine.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

/// Exit rule: paths stop when the forward state leaves the domain. rho is
/// the discount weight of the associated estimates and must exceed
/// nu = mu + 2 p L^2 / alpha_p for the problem being solved.
struct StoppingSpec {
  std::function<bool(std::span<const double> state)> inside;
  double rho = 0.0;
};

/// First grid node whose state falls outside the domain, else the cap index
/// (the last node). Nondecreasing under domain enlargement.
std::vector<std::uint32_t> detect_tau(const PathBundle& bundle, const StoppingSpec& spec,
                                      Exec exec = Exec::parallel);

struct HorizonSolution {
  DiscreteSolution sol;
  std::vector<std::uint32_t> tau;  // stopped node per path
  std::vector<double> xi;          // terminal values at the stopped states, n * k
  /// Regression estimate of E[xi | F_t]: the Y process of the driverless
  /// problem on the same bundle and stopping data. Frozen to xi after tau.
  std::vector<double> xi_proxy;  // n * (N + 1) * k
  double nu = 0.0;               // the weight floor of this problem
};

/// nu = mu + 2 p L^2 / alpha_p with L^2 the summed squared (z, v) Lipschitz
/// bounds; the weight rho must stay strictly above it.
double weight_floor(const GBSDEProblem& prob);

/// Backward solve with the exit rule. Rejects rho <= nu. The fixed-horizon
/// solver is the degenerate case of a domain nothing ever leaves, and the
/// two agree bit for bit there.
HorizonSolution solve_random_horizon(const GBSDEProblem& prob, const StoppingSpec& spec,
                                     const TimeGrid& grid, const PathBundle& bundle,
                                     const SolverConfig& cfg, Exec exec = Exec::parallel);

/// Weighted norm ratio at weight rho with the stopped-time clamp; the
/// empirical shadow of the random-horizon estimate.
RatioReport weighted_norm_report(const HorizonSolution& hsol, const GBSDEProblem& prob,
                                 const PathBundle& bundle, double p, double rho,
                                 Exec exec = Exec::parallel);

struct ExtensionLevel {
  double cap = 0.0;
  std::size_t steps = 0;
  double y0 = 0.0;
  double se = 0.0;
  double mean_tau = 0.0;         // average stopped time
  double stopped_fraction = 0.0; // paths that exit before the cap
  /// S2-empirical distance to the previous level over the previous cap's
  /// nodes; zero for the first level. Shared noise prefixes make this a
  /// pure horizon effect.
  double decrement = 0.0;
};

/// Re-solve under each cap with one seed. Caps must be increasing integer
/// multiples of dt; bundles share increments on common prefixes, so the
/// decrements isolate the horizon-extension error.
std::vector<ExtensionLevel> horizon_extension(const GBSDEProblem& prob,
                                              const StoppingSpec& spec,
                                              const NoiseModel& model, const SolverConfig& cfg,
                                              std::span<const double> caps, double dt,
                                              std::uint64_t seed, std::size_t n_paths,
                                              Exec exec = Exec::parallel);

}  // namespace gbsde
