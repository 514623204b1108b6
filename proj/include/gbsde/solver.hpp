#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gbsde/generator.hpp"
#include "gbsde/grid.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/path_engine.hpp"

namespace gbsde {

/// Backward scheme controls.
///
/// Conditional expectations come from either a least-squares polynomial
/// regression on the forward state (the workhorse) or nested Monte-Carlo
/// regeneration per node (exact in the inner limit, exponential cost, meant
/// for oracle duty on tiny grids).
struct SolverConfig {
  enum class Scheme { regression, nested_mc };

  Scheme scheme = Scheme::regression;
  int degree = 3;  // total polynomial degree of the regression basis
  int inner = 64;  // nested Monte-Carlo branching factor

  double picard_tol = 1e-10;
  int picard_max_iter = 100;
  double damping = 1.0;  // relaxation of the per-node fixed point

  /// Radial clamp applied to the y argument of the driver inside the inner
  /// iteration. Unset: a radius derived from the data bounds. Infinity
  /// disables clamping.
  std::optional<double> p_trunc;

  /// Substream master for nested conditional expectations.
  std::uint64_t inner_seed = 0;

  bool operator==(const SolverConfig&) const = default;
};

struct NodeDiag {
  double residual_rms = 0.0;  // rms of Y_{i+1} minus its fitted conditional mean
  std::size_t n_basis = 0;
  std::size_t n_dropped = 0;  // basis columns removed as collinear by pivoting
  std::size_t n_active = 0;
  double cond_ratio = 1.0;  // min/max Cholesky pivot of the normal equations
  int picard_iters = 0;     // worst case over paths at this node
};

/// Discrete solution (Y, Z, V, M) on the simulation grid. The orthogonal
/// component is stored through its increments dM, the per-node projection
/// residuals. Layouts mirror PathBundle (path-major, row-major blocks);
/// v is atom-major with k-component blocks.
struct DiscreteSolution {
  std::size_t n_paths = 0;
  std::size_t steps = 0;
  std::size_t k = 1;
  std::size_t d = 1;
  std::size_t m = 0;
  double horizon = 0.0;

  std::vector<double> y;   // n * (steps+1) * k
  std::vector<double> z;   // n * steps * k * d
  std::vector<double> v;   // n * steps * m * k
  std::vector<double> dm;  // n * steps * k

  std::vector<NodeDiag> node_diag;  // steps entries
  bool truncation_active = false;
  double trunc_radius = 0.0;

  double y_at(std::size_t p, std::size_t i, std::size_t c = 0) const {
    return y[(p * (steps + 1) + i) * k + c];
  }
  double z_at(std::size_t p, std::size_t i, std::size_t c = 0, std::size_t e = 0) const {
    return z[((p * steps + i) * k + c) * d + e];
  }
  double v_at(std::size_t p, std::size_t i, std::size_t j = 0, std::size_t c = 0) const {
    return v[((p * steps + i) * m + j) * k + c];
  }
  double dm_at(std::size_t p, std::size_t i, std::size_t c = 0) const {
    return dm[(p * steps + i) * k + c];
  }
};

/// Backward solve on a fixed horizon: implicit in y, explicit in (z, v),
/// Z and V estimated from increment correlations, dM as the projection
/// residual. Deterministic for a fixed bundle under both execution policies.
DiscreteSolution solve(const GBSDEProblem& prob, const TimeGrid& grid, const PathBundle& bundle,
                       const SolverConfig& cfg, Exec exec = Exec::parallel);

/// Monte-Carlo summary for the initial value. The standard error comes from
/// the per-path realized values xi + sum h f + sum dR, whose mean coincides
/// with mean Y_0; this captures the sampling noise of the whole backward
/// pass, which the spread of the node-0 fit does not.
struct SolveSummary {
  std::vector<double> y0;  // k entries
  std::vector<double> se;  // k entries
};
SolveSummary solution_summary(const DiscreteSolution& sol, const GBSDEProblem& prob,
                              const PathBundle& bundle,
                              std::span<const std::uint32_t> tau = {},
                              Exec exec = Exec::parallel);

/// The per-path realized values themselves, path-major with k entries per
/// path. Differences across two solves on one bundle keep the coupling, so
/// gap estimates built from them carry the coupled (small) variance.
std::vector<double> realized_values(const DiscreteSolution& sol, const GBSDEProblem& prob,
                                    const PathBundle& bundle,
                                    std::span<const std::uint32_t> tau = {},
                                    Exec exec = Exec::parallel);

/// Outer Picard iteration: repeats whole backward solves with the (z, v)
/// arguments of the driver frozen to the previous iterate, starting from the
/// zero solution. distances[n] = S2-empirical distance between iterates
/// n+1 and n (distances[0] measures the first solve against zero).
struct GlobalPicardResult {
  DiscreteSolution solution;
  std::vector<double> distances;
};
GlobalPicardResult global_picard(const GBSDEProblem& prob, const TimeGrid& grid,
                                 const PathBundle& bundle, const SolverConfig& cfg,
                                 std::size_t outer_iters, Exec exec = Exec::parallel);

struct ChannelStat {
  double mean = 0.0;
  double se = 0.0;
};

/// Empirical covariations of M against the Brownian and compensated jump
/// channels (they must vanish within noise), plus the energies of the three
/// martingale components.
struct OrthoReport {
  std::vector<ChannelStat> brownian;  // k*d entries
  std::vector<ChannelStat> jumps;     // m*k entries
  ChannelStat m_energy;               // E sum |dM|^2
  ChannelStat z_energy;               // E sum |Z|^2 h
  ChannelStat v_energy;               // E sum ||V||_lambda^2 h
};
OrthoReport orthogonality_report(const DiscreteSolution& sol, const PathBundle& bundle,
                                 Exec exec = Exec::parallel);

}  // namespace gbsde
