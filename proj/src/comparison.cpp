#include "gbsde/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gbsde/errors.hpp"
#include "gbsde/rng.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {

namespace {

// Fold per-path (min slack, node) rows into one fact, serial argmin.
void finish_fact(OrderFact& fact, std::span<const double> slack,
                 std::span<const std::size_t> node) {
  fact.checked = true;
  fact.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < slack.size(); ++p) {
    if (slack[p] < fact.min_slack) {
      fact.min_slack = slack[p];
      fact.witness_path = p;
      fact.witness_node = node[p];
    }
  }
  fact.pass = fact.min_slack >= 0.0;
}

}  // namespace

PathBundle scale_r(const PathBundle& bundle, double scale) {
  if (!(scale >= 0.0)) throw std::invalid_argument("R scale must be nonnegative");
  PathBundle out = bundle;
  for (double& x : out.dr) x *= scale;
  for (double& x : out.dr_abs) x *= scale;
  return out;
}

OrderAuditReport audit_order(const ComparisonCase& cmp, const DiscreteSolution& sol_low,
                             const TimeGrid& grid, const PathBundle& bundle, Exec exec) {
  if (cmp.low.k != 1 || cmp.high.k != 1)
    throw std::invalid_argument("comparison needs scalar solutions");
  const std::size_t n = bundle.n_paths;
  const std::size_t N = grid.steps();
  const std::size_t d = bundle.d();
  const std::size_t m = bundle.m();
  const double h = grid.dt();

  OrderAuditReport rep;
  std::vector<double> slack(n);
  std::vector<std::size_t> node(n, 0);

  // terminal ordering at the horizon states
  {
    FirstError err;
    for_each_indexed(
        exec, n,
        [&] { return std::pair<std::vector<double>, std::vector<double>>(
                  std::vector<double>(1), std::vector<double>(1)); },
        [&](std::size_t p, auto& ws) {
          err.run([&] {
            cmp.low.terminal(bundle.state_at(p, N), grid.horizon(), ws.first);
            cmp.high.terminal(bundle.state_at(p, N), grid.horizon(), ws.second);
            slack[p] = ws.second[0] - ws.first[0];
            node[p] = N;
          });
        });
    err.rethrow_if_failed();
    finish_fact(rep.terminal, slack, node);
  }

  // driver ordering along the low solution
  {
    FirstError err;
    for_each_indexed(
        exec, n,
        [&] { return std::pair<std::vector<double>, std::vector<double>>(
                  std::vector<double>(1), std::vector<double>(1)); },
        [&](std::size_t p, auto& ws) {
          err.run([&] {
            double worst = std::numeric_limits<double>::infinity();
            std::size_t worst_i = 0;
            for (std::size_t i = 0; i < N; ++i) {
              const double t = grid.node(i);
              std::span<const double> y{sol_low.y.data() + (p * (N + 1) + i), 1};
              std::span<const double> z{sol_low.z.data() + (p * N + i) * d, d};
              std::span<const double> v{sol_low.v.data() + (p * N + i) * m, m};
              evaluate(cmp.low.gen, t, y, z, v, ws.first);
              evaluate(cmp.high.gen, t, y, z, v, ws.second);
              const double s = ws.second[0] - ws.first[0];
              if (s < worst) {
                worst = s;
                worst_i = i;
              }
            }
            slack[p] = worst;
            node[p] = worst_i;
          });
        });
    err.rethrow_if_failed();
    finish_fact(rep.driver, slack, node);
  }

  // R increment ordering from the scaled bundle increments
  if (!bundle.dr.empty()) {
    for_each_path(exec, n, [&](std::size_t p) {
      double worst = std::numeric_limits<double>::infinity();
      std::size_t worst_i = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const double s =
            cmp.r_scale_high * bundle.dr_at(p, i) - cmp.r_scale_low * bundle.dr_at(p, i);
        if (s < worst) {
          worst = s;
          worst_i = i;
        }
      }
      slack[p] = worst;
      node[p] = worst_i;
    });
    finish_fact(rep.r_increments, slack, node);
  }
  (void)h;
  return rep;
}

KernelAuditReport audit_kernel(const GeneratorSpec& spec, const Dims& dims,
                               const MarkSpace& marks, const AuditConfig& cfg) {
  if (!spec.kappa)
    throw std::invalid_argument("kernel audit needs a generator with a kappa factory");
  if (dims.k != 1) throw std::invalid_argument("kernel audit covers scalar solutions");
  const std::size_t d = dims.d;
  const std::size_t m = dims.m;

  KernelAuditReport rep;
  rep.worst_floor = std::numeric_limits<double>::infinity();
  rep.worst_bound_excess = -std::numeric_limits<double>::infinity();
  rep.worst_inequality_gap = -std::numeric_limits<double>::infinity();

  RngStream rng = RngFactory(cfg.seed, kPurposeAudit).stream(1);
  std::vector<double> y(1), z(d), v(m), v2(m), kappa(m), f1(1), f2(1);
  std::vector<double> tuple(2 + d + 2 * m);
  for (std::size_t s = 0; s < cfg.samples; ++s) {
    const double t = cfg.t_max * rng.uniform();
    y[0] = cfg.y_range * (2.0 * rng.uniform() - 1.0);
    for (auto& x : z) x = cfg.z_range * (2.0 * rng.uniform() - 1.0);
    for (auto& x : v) x = cfg.v_range * (2.0 * rng.uniform() - 1.0);
    for (auto& x : v2) x = cfg.v_range * (2.0 * rng.uniform() - 1.0);

    spec.kappa(t, y[0], z, v, v2, kappa);
    for (std::size_t j = 0; j < m; ++j) {
      rep.worst_floor = std::min(rep.worst_floor, kappa[j]);
      const double theta = j < spec.theta_bound.size()
                               ? spec.theta_bound[j]
                               : std::numeric_limits<double>::infinity();
      rep.worst_bound_excess =
          std::max(rep.worst_bound_excess, std::abs(kappa[j]) - theta);
    }

    spec.f(t, y, z, v, f1);
    spec.f(t, y, z, v2, f2);
    double rhs = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      rhs += (v[j] - v2[j]) * kappa[j] * marks.intensity(j);
    const double gap = (f1[0] - f2[0]) - rhs;
    if (gap > rep.worst_inequality_gap) {
      rep.worst_inequality_gap = gap;
      tuple[0] = t;
      tuple[1] = y[0];
      std::copy(z.begin(), z.end(), tuple.begin() + 2);
      std::copy(v.begin(), v.end(), tuple.begin() + 2 + d);
      std::copy(v2.begin(), v2.end(), tuple.begin() + 2 + d + m);
      rep.witness = tuple;
    }
  }
  if (m == 0) {
    rep.worst_floor = 0.0;
    rep.worst_bound_excess = 0.0;
  }
  rep.floor_ok = rep.worst_floor >= -1.0;
  rep.bound_ok = rep.worst_bound_excess <= cfg.tol;
  rep.inequality_ok = rep.worst_inequality_gap <= cfg.tol;
  return rep;
}

ComparisonReport run_comparison(const ComparisonCase& cmp, const TimeGrid& grid,
                                const PathBundle& bundle, const SolverConfig& cfg, Exec exec) {
  if (cmp.low.k != 1 || cmp.high.k != 1)
    throw std::invalid_argument("comparison needs scalar solutions");
  const std::size_t n = bundle.n_paths;
  const std::size_t N = grid.steps();

  const bool scaled = cmp.r_scale_low != 1.0 || cmp.r_scale_high != 1.0;
  const PathBundle bundle_low = scaled ? scale_r(bundle, cmp.r_scale_low) : bundle;
  const PathBundle bundle_high = scaled ? scale_r(bundle, cmp.r_scale_high) : bundle;

  const DiscreteSolution sol_low = solve(cmp.low, grid, bundle_low, cfg, exec);
  const DiscreteSolution sol_high = solve(cmp.high, grid, bundle_high, cfg, exec);

  ComparisonReport rep;
  rep.order = audit_order(cmp, sol_low, grid, bundle, exec);

  rep.nodes.resize(N + 1);
  std::size_t structural = 0, noisy = 0;
  for (std::size_t i = 0; i <= N; ++i) {
    NodeGapRow row;
    row.node = i;
    // regression noise band; terminal values are data, not estimates
    double se = 0.0;
    if (i < N) {
      auto band = [&](const DiscreteSolution& s) {
        const NodeDiag& dgn = s.node_diag[i];
        if (dgn.n_active == 0) return 0.0;
        return dgn.residual_rms * std::sqrt(static_cast<double>(dgn.n_basis) /
                                            static_cast<double>(dgn.n_active));
      };
      se = std::max(band(sol_low), band(sol_high));
    }
    row.tol = 5.0 * se;
    double min_gap = std::numeric_limits<double>::infinity();
    double max_pos = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double gap = sol_high.y_at(p, i) - sol_low.y_at(p, i);
      min_gap = std::min(min_gap, gap);
      const double pos = std::max(0.0, -gap);
      max_pos = std::max(max_pos, pos);
      if (pos > 0.0) {
        if (pos > row.tol + 1e-14)
          ++row.structural;
        else
          ++row.within_noise;
      }
    }
    row.min_gap = min_gap;
    row.max_pos_part = max_pos;
    structural += row.structural;
    noisy += row.within_noise;
    rep.max_positive_part = std::max(rep.max_positive_part, max_pos);
    rep.nodes[i] = row;
  }
  const double total = static_cast<double>(n * (N + 1));
  rep.structural_fraction = static_cast<double>(structural) / total;
  rep.noise_fraction = static_cast<double>(noisy) / total;
  rep.pass = structural == 0;

  // coupled gap estimate at time zero
  const std::vector<double> pv_low = realized_values(sol_low, cmp.low, bundle_low, {}, exec);
  const std::vector<double> pv_high =
      realized_values(sol_high, cmp.high, bundle_high, {}, exec);
  std::vector<double> dpv(n);
  for (std::size_t p = 0; p < n; ++p) dpv[p] = pv_high[p] - pv_low[p];
  const MeanSe ms = mean_se(dpv);
  rep.gap_at_zero = ms.mean;
  rep.gap_at_zero_se = ms.se;
  return rep;
}

}  // namespace gbsde
