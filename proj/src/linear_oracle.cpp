#include "gbsde/linear_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbsde/errors.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {

namespace {

// Sum of gamma_j lambda_j, the jump compensator drift.
double gamma_lambda(const LinearCoefficients& c, const MarkSpace& ms) {
  double acc = 0.0;
  for (std::size_t j = 0; j < c.gamma.size(); ++j) acc += c.gamma[j] * ms.intensity(j);
  return acc;
}

double beta_sq(const LinearCoefficients& c) {
  double acc = 0.0;
  for (double b : c.beta) acc += b * b;
  return acc;
}

double step_factor(const PathBundle& bundle, const LinearCoefficients& c, double h,
                   double drift, std::size_t path, std::size_t step) {
  double bw = 0.0;
  for (std::size_t q = 0; q < c.beta.size(); ++q)
    bw += c.beta[q] * bundle.dw_at(path, step, q);
  double fac = std::exp(drift * h + bw);
  for (std::size_t j = 0; j < c.gamma.size(); ++j) {
    std::uint32_t n = bundle.count_at(path, step, j);
    while (n-- > 0) fac *= 1.0 + c.gamma[j];
  }
  return fac;
}

}  // namespace

void validate(const LinearCoefficients& c, const NoiseModel& model) {
  if (c.beta.size() != model.brownian_dim)
    throw std::invalid_argument("beta must have one entry per Brownian channel");
  if (c.gamma.size() != model.atom_count())
    throw std::invalid_argument("gamma must have one entry per atom");
  if (!std::isfinite(c.alpha) || !std::isfinite(c.forcing))
    throw std::invalid_argument("linear coefficients must be finite");
  for (double b : c.beta)
    if (!std::isfinite(b)) throw std::invalid_argument("beta entries must be finite");
  for (double g : c.gamma) {
    if (!std::isfinite(g)) throw std::invalid_argument("gamma entries must be finite");
    if (g < -1.0) throw std::invalid_argument("gamma entries must be >= -1");
  }
}

double doleans_gamma(const PathBundle& bundle, const TimeGrid& grid,
                     const LinearCoefficients& c, std::size_t path, std::size_t from,
                     std::size_t to) {
  validate(c, bundle.model);
  if (from > to || to > grid.steps())
    throw std::invalid_argument("doleans_gamma needs from <= to <= steps");
  const double h = grid.dt();
  const double drift = c.alpha - 0.5 * beta_sq(c) - gamma_lambda(c, bundle.model.marks);
  double g = 1.0;
  for (std::size_t i = from; i < to; ++i) g *= step_factor(bundle, c, h, drift, path, i);
  return g;
}

double doleans_gamma_euler(const PathBundle& bundle, const TimeGrid& grid,
                           const LinearCoefficients& c, std::size_t path, std::size_t from,
                           std::size_t to) {
  validate(c, bundle.model);
  if (from > to || to > grid.steps())
    throw std::invalid_argument("doleans_gamma_euler needs from <= to <= steps");
  const double h = grid.dt();
  double g = 1.0;
  for (std::size_t i = from; i < to; ++i) {
    double inc = c.alpha * h;
    for (std::size_t q = 0; q < c.beta.size(); ++q)
      inc += c.beta[q] * bundle.dw_at(path, i, q);
    for (std::size_t j = 0; j < c.gamma.size(); ++j) {
      const double lam = bundle.model.marks.intensity(j);
      inc += c.gamma[j] *
             (static_cast<double>(bundle.count_at(path, i, j)) - lam * h);
    }
    g *= 1.0 + inc;
  }
  return g;
}

namespace {

struct PathAccum {
  std::vector<double> values;       // realized per-path estimate
  std::vector<double> gamma_end;    // Gamma(0, N) per path
  std::vector<double> gamma_min;    // min over nodes per path
};

PathAccum accumulate(const LinearCoefficients& c, const TerminalFn& terminal,
                     const TimeGrid& grid, const PathBundle& bundle, Exec exec) {
  validate(c, bundle.model);
  const std::size_t n = bundle.n_paths;
  const std::size_t N = grid.steps();
  if (bundle.steps != N) throw std::invalid_argument("bundle and grid disagree on step count");
  const double h = grid.dt();
  const double drift = c.alpha - 0.5 * beta_sq(c) - gamma_lambda(c, bundle.model.marks);

  PathAccum acc;
  acc.values.assign(n, 0.0);
  acc.gamma_end.assign(n, 0.0);
  acc.gamma_min.assign(n, 0.0);

  FirstError err;
  for_each_indexed(
      exec, n, [&] { return std::vector<double>(1); },
      [&](std::size_t p, std::vector<double>& xi) {
        err.run([&] {
          double g = 1.0;
          double gmin = 1.0;
          double pv = 0.0;
          for (std::size_t i = 0; i < N; ++i) {
            pv += g * (c.forcing * h + bundle.dr_at(p, i));
            g *= step_factor(bundle, c, h, drift, p, i);
            gmin = std::min(gmin, g);
          }
          terminal(bundle.state_at(p, N), grid.horizon(), xi);
          pv += xi[0] * g;
          if (!std::isfinite(pv)) throw SimulationError("non-finite oracle sample");
          acc.values[p] = pv;
          acc.gamma_end[p] = g;
          acc.gamma_min[p] = gmin;
        });
      });
  err.rethrow_if_failed();
  return acc;
}

}  // namespace

void linear_path_values(const LinearCoefficients& c, const TerminalFn& terminal,
                        const TimeGrid& grid, const PathBundle& bundle, std::span<double> out,
                        Exec exec) {
  if (out.size() != bundle.n_paths)
    throw std::invalid_argument("output span must have one slot per path");
  PathAccum acc = accumulate(c, terminal, grid, bundle, exec);
  std::copy(acc.values.begin(), acc.values.end(), out.begin());
}

OracleEstimate linear_y0_on_bundle(const LinearCoefficients& c, const TerminalFn& terminal,
                                   const TimeGrid& grid, const PathBundle& bundle, Exec exec) {
  PathAccum acc = accumulate(c, terminal, grid, bundle, exec);
  OracleEstimate est;
  est.n_paths = bundle.n_paths;
  const MeanSe v = mean_se(acc.values);
  est.value = v.mean;
  est.se = v.se;
  const MeanSe g = mean_se(acc.gamma_end);
  est.mean_gamma_horizon = g.mean;
  est.se_gamma_horizon = g.se;
  est.min_gamma = *std::min_element(acc.gamma_min.begin(), acc.gamma_min.end());
  return est;
}

OracleEstimate linear_y0(const LinearCoefficients& c, const TerminalFn& terminal,
                         const NoiseModel& model, const TimeGrid& grid, std::uint64_t seed,
                         std::size_t n_paths, Exec exec) {
  const PathBundle bundle = simulate(grid, model, seed, n_paths, exec);
  return linear_y0_on_bundle(c, terminal, grid, bundle, exec);
}

}  // namespace gbsde
