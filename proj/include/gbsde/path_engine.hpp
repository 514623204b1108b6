#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "gbsde/grid.hpp"
#include "gbsde/mark_space.hpp"
#include "gbsde/parallel.hpp"

namespace gbsde {

/// Finite-variation forcing process R with R_0 = 0. Three shapes:
///  - zero:  R identically 0;
///  - rate:  absolutely continuous, dR = rate(t, state) dt evaluated at the
///           left node (a constant rate when no handle is installed);
///  - jumps: deterministic jump times in (0, T] with signed sizes.
struct RSpec {
  enum class Mode { zero, rate, jumps };

  Mode mode = Mode::zero;
  double const_rate = 0.0;
  std::function<double(double t, std::span<const double> state)> rate_fn;  // optional
  std::vector<double> jump_times;
  std::vector<double> jump_sizes;

  bool is_zero() const { return mode == Mode::zero; }

  double rate_at(double t, std::span<const double> state) const {
    return rate_fn ? rate_fn(t, state) : const_rate;
  }

  bool operator==(const RSpec& o) const {
    return mode == o.mode && const_rate == o.const_rate && jump_times == o.jump_times &&
           jump_sizes == o.jump_sizes;
  }
};

/// Driving noise: d-dimensional Brownian motion, a finite-activity Poisson
/// random measure on a mark space, an optional extra Brownian channel that
/// destroys representability (it is never offered to the Z/V projections),
/// and the forcing process R.
struct NoiseModel {
  std::size_t brownian_dim = 1;
  MarkSpace marks;
  std::size_t extra_dim = 0;
  RSpec r;

  std::size_t atom_count() const { return marks.atom_count(); }
  /// Forward Markov state: running levels [W (d), counts (m), B (extra)].
  std::size_t state_dim() const { return brownian_dim + marks.atom_count() + extra_dim; }

  bool operator==(const NoiseModel&) const = default;
};

/// Simulated increments plus running state levels for a set of paths.
/// Layout is path-major; all arrays are plain row-major buffers.
struct PathBundle {
  std::size_t n_paths = 0;
  std::size_t steps = 0;
  NoiseModel model;

  std::vector<double> dw;             // n * steps * d
  std::vector<std::uint32_t> counts;  // n * steps * m
  std::vector<double> db;             // n * steps * extra
  std::vector<double> dr;             // n * steps, empty when R is zero
  std::vector<double> dr_abs;         // n * steps, empty when R is zero
  std::vector<double> state;          // n * (steps+1) * state_dim

  std::size_t d() const { return model.brownian_dim; }
  std::size_t m() const { return model.atom_count(); }
  std::size_t extra() const { return model.extra_dim; }
  std::size_t state_dim() const { return model.state_dim(); }

  double dw_at(std::size_t p, std::size_t i, std::size_t c) const {
    return dw[(p * steps + i) * d() + c];
  }
  std::uint32_t count_at(std::size_t p, std::size_t i, std::size_t j) const {
    return counts[(p * steps + i) * m() + j];
  }
  double db_at(std::size_t p, std::size_t i, std::size_t c) const {
    return db[(p * steps + i) * extra() + c];
  }
  double dr_at(std::size_t p, std::size_t i) const {
    return dr.empty() ? 0.0 : dr[p * steps + i];
  }
  double dr_abs_at(std::size_t p, std::size_t i) const {
    return dr_abs.empty() ? 0.0 : dr_abs[p * steps + i];
  }
  std::span<const double> state_at(std::size_t p, std::size_t i) const {
    return {state.data() + (p * (steps + 1) + i) * state_dim(), state_dim()};
  }

  bool operator==(const PathBundle&) const = default;
};

/// Simulates n_paths over the grid. Each path owns the substream
/// (seed, path index), so output is bit-identical for any execution policy
/// and any path count extension keeps existing paths unchanged. A longer
/// grid with the same step size extends each path's draws as a prefix.
PathBundle simulate(const TimeGrid& grid, const NoiseModel& model, std::uint64_t seed,
                    std::size_t n_paths, Exec exec = Exec::parallel);

/// Compensated jump increments n_j - lambda_j h for one (path, step).
void compensated_increment(const PathBundle& bundle, std::size_t path, std::size_t step,
                           double dt, std::span<double> out);

/// Same, from raw counts.
std::vector<double> compensated_increment(std::span<const std::uint32_t> step_counts,
                                          const MarkSpace& ms, double dt);

/// Bundle dump/restore as CSV. The header row names every channel; restore
/// rebuilds the running state by summation. Restoring a dump reproduces the
/// bundle bit for bit.
void dump_bundle_csv(const PathBundle& bundle, std::ostream& out);
PathBundle restore_bundle_csv(std::istream& in, const NoiseModel& model);

/// Per-step (signed, absolute) R increments for the deterministic-jumps
/// mode; a jump at time t lands in the step with t_i < t <= t_{i+1}.
std::pair<std::vector<double>, std::vector<double>> jump_step_increments(const RSpec& r,
                                                                         const TimeGrid& grid);

}  // namespace gbsde
