// Backward scheme for generalized BSDEs with jumps.
//
// One step of the recursion, per path p at node i:
//
//   Y_i  solves  y = E[Y_{i+1} | F_i] + h f(t_i, clamp(y), Z_i, V_i) + dR_i
//   Z_i  = E[(Y_{i+1} - E[Y_{i+1}|F_i]) dW_i   | F_i] / h
//   V_ij = E[(Y_{i+1} - E[Y_{i+1}|F_i]) dpi_ij | F_i] / (lambda_j h)
//   dM_i = Y_{i+1} - E[Y_{i+1}|F_i] - Z_i dW_i - sum_j V_ij dpi_ij
//
// with dpi the compensated jump increments. Conditional expectations are
// projections on polynomials of the forward state; centring the regression
// targets makes constants reproduce exactly, so constant data propagates
// through the whole recursion at machine precision. All cross-path
// reductions use fixed blocking, which keeps results identical across
// execution policies and thread counts.

#include "gbsde/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>

#include "gbsde/detail/solver_core.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/rng.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {
namespace detail {

namespace {

constexpr std::size_t kReduceBlock = 4096;

// Deterministic blocked reduction: per-block partials are accumulated
// serially inside a block, blocks run in parallel, and the merge walks
// blocks in index order.
template <class PerItem>
void blocked_accumulate(Exec exec, std::size_t n_items, std::size_t width, PerItem per_item,
                        std::vector<double>& out) {
  const std::size_t n_blocks = (n_items + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partials(n_blocks * width, 0.0);
  for_each_path(exec, n_blocks, [&](std::size_t b) {
    double* acc = partials.data() + b * width;
    const std::size_t lo = b * kReduceBlock;
    const std::size_t hi = std::min(lo + kReduceBlock, n_items);
    for (std::size_t a = lo; a < hi; ++a) per_item(a, acc);
  });
  out.assign(width, 0.0);
  for (std::size_t b = 0; b < n_blocks; ++b)
    for (std::size_t w = 0; w < width; ++w) out[w] += partials[b * width + w];
}

// Monomial exponent table over the usable coordinates, total degree bounded,
// constant term first, deterministic order.
void enumerate_powers(std::size_t n_coords, int degree,
                      std::vector<std::vector<std::uint8_t>>& out) {
  out.clear();
  std::vector<std::uint8_t> cur(n_coords, 0);
  struct Rec {
    static void go(std::size_t pos, int remaining, std::vector<std::uint8_t>& cur,
                   std::vector<std::vector<std::uint8_t>>& out) {
      if (pos == cur.size()) {
        out.push_back(cur);
        return;
      }
      for (int e = 0; e <= remaining; ++e) {
        cur[pos] = static_cast<std::uint8_t>(e);
        go(pos + 1, remaining - e, cur, out);
      }
      cur[pos] = 0;
    }
  };
  Rec::go(0, degree, cur, out);
  // constant first, then by total degree, ties lexicographic; stable and
  // deterministic
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (auto e : a) da += e;
    for (auto e : b) db += e;
    if (da != db) return da < db;
    return a < b;
  });
}

// Least-squares projection onto standardized monomials of the state at one
// node, shared by every target fitted at that node.
class NodeFitter {
 public:
  NodeFitter(const PathBundle& bundle, std::span<const std::uint32_t> active, std::size_t node,
             int degree, Exec exec)
      : bundle_(bundle), active_(active), node_(node), exec_(exec) {
    const std::size_t sdim = bundle.state_dim();
    const std::size_t n = active.size();

    // usable coordinates: enough spread to standardize
    std::vector<double> moments;
    blocked_accumulate(
        exec, n, 2 * sdim,
        [&](std::size_t a, double* acc) {
          const auto st = bundle_.state_at(active_[a], node_);
          for (std::size_t c = 0; c < st.size(); ++c) {
            acc[2 * c] += st[c];
            acc[2 * c + 1] += st[c] * st[c];
          }
        },
        moments);
    for (std::size_t c = 0; c < sdim; ++c) {
      const double mean = moments[2 * c] / static_cast<double>(n);
      const double var =
          std::max(0.0, moments[2 * c + 1] / static_cast<double>(n) - mean * mean);
      const double sd = std::sqrt(var);
      if (sd > 1e-12 * (1.0 + std::abs(mean))) {
        coords_.push_back(c);
        shift_.push_back(mean);
        scale_.push_back(1.0 / sd);
      }
    }

    enumerate_powers(coords_.size(), degree, powers_);
    nb_ = powers_.size();
    if (nb_ > n) throw RegressionSingularError(node_, 0.0);

    phi_.assign(n * nb_, 0.0);
    for_each_indexed(
        exec, n, [&] { return std::vector<double>(coords_.size()); },
        [&](std::size_t a, std::vector<double>& xs) {
          const auto st = bundle_.state_at(active_[a], node_);
          for (std::size_t c = 0; c < coords_.size(); ++c)
            xs[c] = (st[coords_[c]] - shift_[c]) * scale_[c];
          double* row = phi_.data() + a * nb_;
          for (std::size_t j = 0; j < nb_; ++j) {
            double val = 1.0;
            const auto& pw = powers_[j];
            for (std::size_t c = 0; c < pw.size(); ++c)
              for (int e = 0; e < pw[c]; ++e) val *= xs[c];
            row[j] = val;
          }
        });

    // normal equations, lower triangle
    std::vector<double> gram_packed;
    blocked_accumulate(
        exec, n, nb_ * (nb_ + 1) / 2,
        [&](std::size_t a, double* acc) {
          const double* row = phi_.data() + a * nb_;
          std::size_t idx = 0;
          for (std::size_t r = 0; r < nb_; ++r)
            for (std::size_t c = 0; c <= r; ++c) acc[idx++] += row[r] * row[c];
        },
        gram_packed);

    chol_.assign(nb_ * nb_, 0.0);
    {
      std::size_t idx = 0;
      for (std::size_t r = 0; r < nb_; ++r)
        for (std::size_t c = 0; c <= r; ++c) chol_[r * nb_ + c] = gram_packed[idx++];
    }
    double max_diag = 0.0;
    for (std::size_t r = 0; r < nb_; ++r) max_diag = std::max(max_diag, chol_[r * nb_ + r]);
    if (!(max_diag > 0.0)) throw RegressionSingularError(node_, 0.0);

    // Pivoted factorization: a column whose pivot falls below tolerance is a
    // near-combination of earlier columns (discrete states repeat values, so
    // high monomials collapse). Drop it; the projector stays linear in the
    // target, so dropping depends on states only.
    kept_.assign(nb_, 1);
    double min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nb_; ++c) {
      double diag = chol_[c * nb_ + c];
      for (std::size_t t = 0; t < c; ++t) diag -= chol_[c * nb_ + t] * chol_[c * nb_ + t];
      if (!(diag > 1e-13 * max_diag)) {
        kept_[c] = 0;
        ++n_dropped_;
        chol_[c * nb_ + c] = 1.0;
        for (std::size_t t = 0; t < c; ++t) chol_[c * nb_ + t] = 0.0;
        for (std::size_t r = c + 1; r < nb_; ++r) chol_[r * nb_ + c] = 0.0;
        continue;
      }
      diag = std::sqrt(diag);
      min_pivot = std::min(min_pivot, diag);
      chol_[c * nb_ + c] = diag;
      for (std::size_t r = c + 1; r < nb_; ++r) {
        double sum = chol_[r * nb_ + c];
        for (std::size_t t = 0; t < c; ++t) sum -= chol_[r * nb_ + t] * chol_[c * nb_ + t];
        chol_[r * nb_ + c] = sum / diag;
      }
    }
    cond_ratio_ = min_pivot / std::sqrt(max_diag);
  }

  std::size_t basis_size() const { return nb_; }
  std::size_t n_dropped() const { return n_dropped_; }
  double cond_ratio() const { return cond_ratio_; }

  /// Centred fit: predictions of E[target | state]. Reproduces a constant
  /// target exactly (its centred residual is the zero vector).
  void fit(std::span<const double> target, std::span<double> prediction) const {
    const std::size_t n = active_.size();
    const double mu = pairwise_sum(target) / static_cast<double>(n);

    std::vector<double> rhs;
    blocked_accumulate(
        exec_, n, nb_,
        [&](std::size_t a, double* acc) {
          const double* row = phi_.data() + a * nb_;
          const double t = target[a] - mu;
          for (std::size_t j = 0; j < nb_; ++j) acc[j] += row[j] * t;
        },
        rhs);

    // solve L L^T beta = rhs over the kept columns; dropped ones get beta 0
    std::vector<double> beta(rhs);
    for (std::size_t r = 0; r < nb_; ++r) {
      if (!kept_[r]) {
        beta[r] = 0.0;
        continue;
      }
      double sum = beta[r];
      for (std::size_t c = 0; c < r; ++c) sum -= chol_[r * nb_ + c] * beta[c];
      beta[r] = sum / chol_[r * nb_ + r];
    }
    for (std::size_t r = nb_; r-- > 0;) {
      if (!kept_[r]) {
        beta[r] = 0.0;
        continue;
      }
      double sum = beta[r];
      for (std::size_t c = r + 1; c < nb_; ++c) sum -= chol_[c * nb_ + r] * beta[c];
      beta[r] = sum / chol_[r * nb_ + r];
    }

    for_each_path(exec_, n, [&](std::size_t a) {
      const double* row = phi_.data() + a * nb_;
      double acc = mu;
      for (std::size_t j = 0; j < nb_; ++j) acc += row[j] * beta[j];
      prediction[a] = acc;
    });
  }

 private:
  const PathBundle& bundle_;
  std::span<const std::uint32_t> active_;
  std::size_t node_;
  Exec exec_;
  std::vector<std::size_t> coords_;
  std::vector<double> shift_, scale_;
  std::vector<std::vector<std::uint8_t>> powers_;
  std::size_t nb_ = 0;
  std::vector<double> phi_;    // n_active x nb
  std::vector<double> chol_;   // nb x nb lower factor
  std::vector<char> kept_;     // columns that survived pivoting
  std::size_t n_dropped_ = 0;
  double cond_ratio_ = 1.0;
};

struct PicardScratch {
  std::vector<double> y_cur, y_next, y_clamped, f_out;
  explicit PicardScratch(std::size_t k)
      : y_cur(k), y_next(k), y_clamped(k), f_out(k) {}
};

// Damped fixed point for y = base + h f(t, clamp(y), z, v). Throws when the
// iteration fails to settle; that happens only when h times the local
// Lipschitz modulus reaches one.
void picard_solve(const GBSDEProblem& prob, double t, double h,
                  std::span<const double> base, std::span<const double> z,
                  std::span<const double> v, double radius, const SolverConfig& cfg,
                  std::size_t node, PicardScratch& ws, std::span<double> out,
                  int& iters_used) {
  const std::size_t k = prob.k;
  std::copy(base.begin(), base.end(), ws.y_cur.begin());
  double prev_delta = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.picard_max_iter; ++it) {
    truncate({ws.y_cur.data(), k}, radius, {ws.y_clamped.data(), k});
    evaluate(prob.gen, t, {ws.y_clamped.data(), k}, z, v, {ws.f_out.data(), k});
    double delta = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double target = base[c] + h * ws.f_out[c];
      const double next = (1.0 - cfg.damping) * ws.y_cur[c] + cfg.damping * target;
      delta = std::max(delta, std::abs(next - ws.y_cur[c]));
      ws.y_next[c] = next;
    }
    std::swap(ws.y_cur, ws.y_next);
    if (delta <= cfg.picard_tol) {
      std::copy(ws.y_cur.begin(), ws.y_cur.end(), out.begin());
      iters_used = it + 1;
      return;
    }
    if (!std::isfinite(delta) || delta > 1e12)
      throw PicardDivergedError(node, t, delta / std::max(prev_delta, 1e-300));
    prev_delta = delta;
  }
  throw PicardDivergedError(node, t, 1.0);
}

// Nested conditional expectations: regenerate one-step sub-bundles from a
// node state and recurse to the horizon. Exact as the branching factor
// grows; cost is inner^(N - i), so this stays an oracle-scale device.
class NestedEstimator {
 public:
  NestedEstimator(const GBSDEProblem& prob, const TimeGrid& grid, const NoiseModel& model,
                  const SolverConfig& cfg, double radius)
      : prob_(prob), grid_(grid), model_(model), cfg_(cfg), radius_(radius) {
    if (model_.r.mode == RSpec::Mode::jumps)
      std::tie(step_dr_, step_dr_abs_) = jump_step_increments(model_.r, grid_);
  }

  // yhat, zhat (k*d), vhat (m*k) at (node, state); samples one step ahead.
  void estimate(std::size_t node, std::span<const double> state, RngStream& rng,
                std::span<double> yhat, std::span<double> zhat, std::span<double> vhat) const {
    const std::size_t k = prob_.k;
    const std::size_t d = model_.brownian_dim;
    const std::size_t m = model_.atom_count();
    const std::size_t e = model_.extra_dim;
    const double h = grid_.dt();
    const double sqrt_h = std::sqrt(h);
    const std::size_t inner = static_cast<std::size_t>(cfg_.inner);

    std::vector<double> ys(inner * k), dws(inner * d), dpis(inner * m);
    std::vector<double> next_state(state.size());
    for (std::size_t s = 0; s < inner; ++s) {
      std::copy(state.begin(), state.end(), next_state.begin());
      for (std::size_t c = 0; c < d; ++c) {
        const double inc = sqrt_h * rng.normal();
        dws[s * d + c] = inc;
        next_state[c] += inc;
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double lam = model_.marks.intensity(j);
        const std::uint32_t n = rng.poisson(lam * h);
        dpis[s * m + j] = static_cast<double>(n) - lam * h;
        next_state[d + j] += static_cast<double>(n);
      }
      for (std::size_t c = 0; c < e; ++c) next_state[d + m + c] += sqrt_h * rng.normal();
      value(node + 1, next_state, rng, {ys.data() + s * k, k});
    }

    const double w = 1.0 / static_cast<double>(inner);
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t s = 0; s < inner; ++s) acc += ys[s * k + c];
      yhat[c] = acc * w;
    }
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t q = 0; q < d; ++q) {
        double acc = 0.0;
        for (std::size_t s = 0; s < inner; ++s)
          acc += (ys[s * k + c] - yhat[c]) * dws[s * d + q];
        zhat[c * d + q] = acc * w / h;
      }
    for (std::size_t j = 0; j < m; ++j) {
      const double lam = model_.marks.intensity(j);
      for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t s = 0; s < inner; ++s)
          acc += (ys[s * k + c] - yhat[c]) * dpis[s * m + j];
        vhat[j * k + c] = acc * w / (lam * h);
      }
    }
  }

  void value(std::size_t node, std::span<const double> state, RngStream& rng,
             std::span<double> out) const {
    const std::size_t k = prob_.k;
    if (node == grid_.steps()) {
      prob_.terminal(state, grid_.horizon(), out);
      return;
    }
    std::vector<double> yhat(k), zhat(k * model_.brownian_dim),
        vhat(model_.atom_count() * k);
    estimate(node, state, rng, yhat, zhat, vhat);
    const double t = grid_.node(node);
    double dr = 0.0;
    if (model_.r.mode == RSpec::Mode::rate)
      dr = model_.r.rate_at(t, state) * grid_.dt();
    else if (model_.r.mode == RSpec::Mode::jumps)
      dr = step_dr_[node];
    std::vector<double> base(k);
    for (std::size_t c = 0; c < k; ++c) base[c] = yhat[c] + dr;
    PicardScratch ws(k);
    int iters = 0;
    picard_solve(prob_, t, grid_.dt(), base, zhat, vhat, radius_, cfg_, node, ws, out, iters);
  }

 private:
  const GBSDEProblem& prob_;
  const TimeGrid& grid_;
  const NoiseModel& model_;
  const SolverConfig& cfg_;
  double radius_;
  std::vector<double> step_dr_, step_dr_abs_;
};

}  // namespace

double effective_dr(const PathBundle& bundle, std::size_t p, std::size_t i,
                    double variation_cap, double running_abs_before) {
  if (std::isinf(variation_cap)) return bundle.dr_at(p, i);
  return running_abs_before <= variation_cap ? bundle.dr_at(p, i) : 0.0;
}

DiscreteSolution solve_core(const CoreArgs& args) {
  const GBSDEProblem& prob = *args.prob;
  const TimeGrid& grid = *args.grid;
  const PathBundle& bundle = *args.bundle;
  const SolverConfig& cfg = *args.cfg;
  const Exec exec = args.exec;

  const std::size_t n = bundle.n_paths;
  const std::size_t N = grid.steps();
  const std::size_t k = prob.k;
  const std::size_t d = bundle.d();
  const std::size_t m = bundle.m();
  const double h = grid.dt();

  if (bundle.steps != N) throw std::invalid_argument("bundle and grid disagree on step count");
  if (n == 0) throw std::invalid_argument("bundle has no paths");
  if (!args.tau.empty() && args.tau.size() != n)
    throw std::invalid_argument("stopping vector length must match path count");
  if (args.frozen_zv &&
      (args.frozen_zv->n_paths != n || args.frozen_zv->steps != N || args.frozen_zv->k != k))
    throw std::invalid_argument("frozen iterate has mismatched shape");
  if (cfg.scheme == SolverConfig::Scheme::nested_mc && !args.tau.empty())
    throw std::invalid_argument("nested conditional expectations support fixed horizons only");
  if (!(cfg.damping > 0.0) || cfg.damping > 1.0)
    throw std::invalid_argument("damping must lie in (0, 1]");

  DiscreteSolution sol;
  sol.n_paths = n;
  sol.steps = N;
  sol.k = k;
  sol.d = d;
  sol.m = m;
  sol.horizon = grid.horizon();
  sol.y.assign(n * (N + 1) * k, 0.0);
  sol.z.assign(n * N * k * d, 0.0);
  sol.v.assign(n * N * m * k, 0.0);
  sol.dm.assign(n * N * k, 0.0);
  sol.node_diag.assign(N, NodeDiag{});

  auto tau_of = [&](std::size_t p) -> std::size_t {
    return args.tau.empty() ? N : static_cast<std::size_t>(args.tau[p]);
  };

  // terminal values at the stopped node, then freeze Y on [tau, N]
  std::vector<double> xi(n * k, 0.0);
  {
    FirstError err;
    for_each_indexed(
        exec, n, [&] { return std::vector<double>(k); },
        [&](std::size_t p, std::vector<double>& buf) {
          err.run([&] {
            const std::size_t tp = tau_of(p);
            if (args.xi.empty()) {
              prob.terminal(bundle.state_at(p, tp), grid.node(tp), buf);
              std::copy(buf.begin(), buf.end(), xi.begin() + p * k);
            } else {
              std::copy(args.xi.begin() + p * k, args.xi.begin() + (p + 1) * k,
                        xi.begin() + p * k);
            }
            for (std::size_t i = tp; i <= N; ++i)
              std::memcpy(sol.y.data() + (p * (N + 1) + i) * k, xi.data() + p * k,
                          k * sizeof(double));
          });
        });
    err.rethrow_if_failed();
  }

  // forcing norm per node and its prefix integral, for the clamp radius
  std::vector<double> f0(N, 0.0);
  const Dims dims{k, d, m};
  for (std::size_t i = 0; i < N; ++i) f0[i] = f0_norm_at(prob.gen, dims, grid.node(i));

  double radius;
  if (cfg.p_trunc) {
    radius = *cfg.p_trunc;
    if (!(radius > 0.0)) throw std::invalid_argument("truncation level must be positive");
  } else {
    // a-priori bound: data size scaled by sqrt(2 + T^2)
    std::vector<double> per_path(n, 0.0);
    for_each_path(exec, n, [&](std::size_t p) {
      const std::size_t tp = tau_of(p);
      double xin = 0.0;
      for (std::size_t c = 0; c < k; ++c) xin += xi[p * k + c] * xi[p * k + c];
      double acc = std::sqrt(xin);
      for (std::size_t i = 0; i < tp; ++i) acc += h * f0[i] + bundle.dr_abs_at(p, i);
      per_path[p] = acc;
    });
    double eps_hat = 0.0;
    for (double x : per_path) eps_hat = std::max(eps_hat, x);
    radius = 3.0 * std::sqrt(2.0 + grid.horizon() * grid.horizon()) * eps_hat;
    if (!(radius > 0.0)) radius = 1.0;
  }
  if (!std::isfinite(radius) && !std::isinf(radius))
    throw std::invalid_argument("truncation level must not be NaN");
  sol.trunc_radius = radius;

  // running variation of R before each step, for the variation cap
  const bool need_rmask = std::isfinite(prob.r_variation_cap) && !bundle.dr_abs.empty();
  std::vector<double> r_prefix;
  if (need_rmask) {
    r_prefix.assign(n * N, 0.0);
    for_each_path(exec, n, [&](std::size_t p) {
      double acc = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        r_prefix[p * N + i] = acc;
        acc += bundle.dr_abs_at(p, i);
      }
    });
  }

  std::unique_ptr<NestedEstimator> nested;
  if (cfg.scheme == SolverConfig::Scheme::nested_mc)
    nested = std::make_unique<NestedEstimator>(prob, grid, bundle.model, cfg, radius);
  const RngFactory nested_factory(cfg.inner_seed, kPurposeNested);

  std::vector<std::uint32_t> active;
  active.reserve(n);
  std::vector<double> target(n), pred(n), yhat;  // fit scratch
  yhat.reserve(n * k);
  std::atomic<bool> truncation_seen{false};

  for (std::size_t i_plus = N; i_plus-- > 0;) {
    const std::size_t i = i_plus;
    const double t = grid.node(i);

    active.clear();
    for (std::size_t p = 0; p < n; ++p)
      if (tau_of(p) > i) active.push_back(static_cast<std::uint32_t>(p));
    NodeDiag diag;
    diag.n_active = active.size();
    if (active.empty()) {
      sol.node_diag[i] = diag;
      continue;
    }
    const std::size_t na = active.size();
    yhat.assign(na * k, 0.0);

    if (cfg.scheme == SolverConfig::Scheme::regression) {
      NodeFitter fitter(bundle, active, i, cfg.degree, exec);
      diag.n_basis = fitter.basis_size();
      diag.n_dropped = fitter.n_dropped();
      diag.cond_ratio = fitter.cond_ratio();

      // conditional mean of Y_{i+1}
      for (std::size_t c = 0; c < k; ++c) {
        for_each_path(exec, na, [&](std::size_t a) {
          target[a] = sol.y_at(active[a], i + 1, c);
        });
        fitter.fit({target.data(), na}, {pred.data(), na});
        for (std::size_t a = 0; a < na; ++a) yhat[a * k + c] = pred[a];
      }
      // increment-correlation estimators on the centred residual
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t q = 0; q < d; ++q) {
          for_each_path(exec, na, [&](std::size_t a) {
            const std::size_t p = active[a];
            target[a] =
                (sol.y_at(p, i + 1, c) - yhat[a * k + c]) * bundle.dw_at(p, i, q) / h;
          });
          fitter.fit({target.data(), na}, {pred.data(), na});
          for (std::size_t a = 0; a < na; ++a)
            sol.z[((active[a] * N + i) * k + c) * d + q] = pred[a];
        }
      for (std::size_t j = 0; j < m; ++j) {
        const double lam = bundle.model.marks.intensity(j);
        for (std::size_t c = 0; c < k; ++c) {
          for_each_path(exec, na, [&](std::size_t a) {
            const std::size_t p = active[a];
            const double dpi = static_cast<double>(bundle.count_at(p, i, j)) - lam * h;
            target[a] = (sol.y_at(p, i + 1, c) - yhat[a * k + c]) * dpi / (lam * h);
          });
          fitter.fit({target.data(), na}, {pred.data(), na});
          for (std::size_t a = 0; a < na; ++a)
            sol.v[((active[a] * N + i) * m + j) * k + c] = pred[a];
        }
      }
    } else {
      FirstError err;
      for_each_indexed(
          exec, na,
          [&] {
            return std::pair<std::vector<double>, std::vector<double>>(
                std::vector<double>(k * d), std::vector<double>(m * k));
          },
          [&](std::size_t a, auto& ws) {
            err.run([&] {
              const std::size_t p = active[a];
              RngStream rng = nested_factory.stream(p * (N + 1) + i);
              nested->estimate(i, bundle.state_at(p, i), rng, {yhat.data() + a * k, k},
                               ws.first, ws.second);
              for (std::size_t c = 0; c < k; ++c)
                for (std::size_t q = 0; q < d; ++q)
                  sol.z[((p * N + i) * k + c) * d + q] = ws.first[c * d + q];
              for (std::size_t j = 0; j < m; ++j)
                for (std::size_t c = 0; c < k; ++c)
                  sol.v[((p * N + i) * m + j) * k + c] = ws.second[j * k + c];
            });
          });
      err.rethrow_if_failed();
      diag.n_basis = 0;
      diag.cond_ratio = 1.0;
    }

    // projection residual and implicit step
    FirstError err;
    std::vector<int> iters(na, 0);
    std::vector<double> res_sq(na, 0.0);
    for_each_indexed(
        exec, na, [&] { return PicardScratch(k); },
        [&](std::size_t a, PicardScratch& ws) {
          err.run([&] {
            const std::size_t p = active[a];
            double rs = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
              double resid = sol.y_at(p, i + 1, c) - yhat[a * k + c];
              rs += resid * resid;
              for (std::size_t q = 0; q < d; ++q)
                resid -= sol.z_at(p, i, c, q) * bundle.dw_at(p, i, q);
              for (std::size_t j = 0; j < m; ++j) {
                const double lam = bundle.model.marks.intensity(j);
                const double dpi = static_cast<double>(bundle.count_at(p, i, j)) - lam * h;
                resid -= sol.v_at(p, i, j, c) * dpi;
              }
              sol.dm[(p * N + i) * k + c] = resid;
            }
            res_sq[a] = rs;

            const double dr_eff =
                effective_dr(bundle, p, i, prob.r_variation_cap,
                             need_rmask ? r_prefix[p * N + i] : 0.0);
            std::vector<double> base(k);
            for (std::size_t c = 0; c < k; ++c) base[c] = yhat[a * k + c] + dr_eff;

            const double* zrow = args.frozen_zv ? args.frozen_zv->z.data() + (p * N + i) * k * d
                                                : sol.z.data() + (p * N + i) * k * d;
            const double* vrow = args.frozen_zv ? args.frozen_zv->v.data() + (p * N + i) * m * k
                                                : sol.v.data() + (p * N + i) * m * k;
            int used = 0;
            picard_solve(prob, t, h, base, {zrow, k * d}, {vrow, m * k}, radius, cfg, i, ws,
                         {sol.y.data() + (p * (N + 1) + i) * k, k}, used);
            iters[a] = used;

            double yn = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
              const double yv = sol.y_at(p, i, c);
              yn += yv * yv;
            }
            if (std::sqrt(yn) >= radius) truncation_seen.store(true, std::memory_order_relaxed);
          });
        });
    err.rethrow_if_failed();

    double ssq = pairwise_sum({res_sq.data(), na});
    diag.residual_rms = std::sqrt(ssq / static_cast<double>(na * k));
    diag.picard_iters = *std::max_element(iters.begin(), iters.end());
    sol.node_diag[i] = diag;
  }

  sol.truncation_active = truncation_seen.load();
  return sol;
}

}  // namespace detail

DiscreteSolution solve(const GBSDEProblem& prob, const TimeGrid& grid, const PathBundle& bundle,
                       const SolverConfig& cfg, Exec exec) {
  detail::CoreArgs args;
  args.prob = &prob;
  args.grid = &grid;
  args.bundle = &bundle;
  args.cfg = &cfg;
  args.exec = exec;
  return detail::solve_core(args);
}

std::vector<double> realized_values(const DiscreteSolution& sol, const GBSDEProblem& prob,
                                    const PathBundle& bundle,
                                    std::span<const std::uint32_t> tau, Exec exec) {
  const std::size_t n = sol.n_paths;
  const std::size_t N = sol.steps;
  const std::size_t k = sol.k;
  const std::size_t d = sol.d;
  const std::size_t m = sol.m;
  const double h = sol.horizon / static_cast<double>(N);

  // per-path realized value: terminal + integrated driver + R mass
  std::vector<double> realized(n * k, 0.0);
  FirstError err;
  for_each_indexed(
      exec, n,
      [&] {
        return std::pair<std::vector<double>, std::vector<double>>(std::vector<double>(k),
                                                                   std::vector<double>(k));
      },
      [&](std::size_t p, auto& ws) {
        err.run([&] {
          auto& acc = ws.first;
          auto& fout = ws.second;
          const std::size_t tp = tau.empty() ? N : tau[p];
          for (std::size_t c = 0; c < k; ++c) acc[c] = sol.y_at(p, tp, c);
          double running_abs = 0.0;
          for (std::size_t i = 0; i < tp; ++i) {
            const double t = h * static_cast<double>(i);
            evaluate(prob.gen, t, {sol.y.data() + (p * (N + 1) + i) * k, k},
                     {sol.z.data() + (p * N + i) * k * d, k * d},
                     {sol.v.data() + (p * N + i) * m * k, m * k}, fout);
            const double dr_eff =
                detail::effective_dr(bundle, p, i, prob.r_variation_cap, running_abs);
            running_abs += bundle.dr_abs_at(p, i);
            for (std::size_t c = 0; c < k; ++c) acc[c] += h * fout[c] + (c == 0 ? dr_eff : 0.0);
          }
          std::copy(acc.begin(), acc.end(), realized.begin() + p * k);
        });
      });
  err.rethrow_if_failed();
  return realized;
}

SolveSummary solution_summary(const DiscreteSolution& sol, const GBSDEProblem& prob,
                              const PathBundle& bundle, std::span<const std::uint32_t> tau,
                              Exec exec) {
  const std::size_t n = sol.n_paths;
  const std::size_t k = sol.k;
  const std::vector<double> realized = realized_values(sol, prob, bundle, tau, exec);

  SolveSummary out;
  out.y0.resize(k);
  out.se.resize(k);
  std::vector<double> col(n);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t p = 0; p < n; ++p) col[p] = sol.y_at(p, 0, c);
    out.y0[c] = pairwise_sum(col) / static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p) col[p] = realized[p * k + c];
    out.se[c] = mean_se(col).se;
  }
  return out;
}

GlobalPicardResult global_picard(const GBSDEProblem& prob, const TimeGrid& grid,
                                 const PathBundle& bundle, const SolverConfig& cfg,
                                 std::size_t outer_iters, Exec exec) {
  if (outer_iters == 0) throw std::invalid_argument("outer iteration count must be positive");
  const std::size_t n = bundle.n_paths;
  const std::size_t N = grid.steps();
  const std::size_t k = prob.k;

  DiscreteSolution prev;
  prev.n_paths = n;
  prev.steps = N;
  prev.k = k;
  prev.d = bundle.d();
  prev.m = bundle.m();
  prev.horizon = grid.horizon();
  prev.y.assign(n * (N + 1) * k, 0.0);
  prev.z.assign(n * N * k * prev.d, 0.0);
  prev.v.assign(n * N * prev.m * k, 0.0);
  prev.dm.assign(n * N * k, 0.0);
  prev.node_diag.assign(N, NodeDiag{});

  auto s2_distance = [&](const DiscreteSolution& a, const DiscreteSolution& b) {
    std::vector<double> sup(n, 0.0);
    for_each_path(exec, n, [&](std::size_t p) {
      double worst = 0.0;
      for (std::size_t i = 0; i <= N; ++i) {
        double g2 = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
          const double g = a.y_at(p, i, c) - b.y_at(p, i, c);
          g2 += g * g;
        }
        worst = std::max(worst, g2);
      }
      sup[p] = worst;
    });
    return std::sqrt(pairwise_sum(sup) / static_cast<double>(n));
  };

  GlobalPicardResult out;
  detail::CoreArgs args;
  args.prob = &prob;
  args.grid = &grid;
  args.bundle = &bundle;
  args.cfg = &cfg;
  args.exec = exec;
  for (std::size_t it = 0; it < outer_iters; ++it) {
    args.frozen_zv = &prev;
    DiscreteSolution cur = detail::solve_core(args);
    out.distances.push_back(s2_distance(cur, prev));
    prev = std::move(cur);
  }
  out.solution = std::move(prev);
  return out;
}

OrthoReport orthogonality_report(const DiscreteSolution& sol, const PathBundle& bundle,
                                 Exec exec) {
  const std::size_t n = sol.n_paths;
  const std::size_t N = sol.steps;
  const std::size_t k = sol.k;
  const std::size_t d = sol.d;
  const std::size_t m = sol.m;
  const double h = sol.horizon / static_cast<double>(N);

  // Columns per path: the covariation sums, then the squared compensator
  // noise sum_i ((Z dW + V dpi) u_e - <.,u_e>)^2 per channel, then energies.
  // The second block widens the covariation SE: the fitted coefficients pin
  // mean resid*dW to h*mean Z exactly in-sample, so cross-path dispersion
  // alone misses the quadratic-variation sampling noise that the channel
  // means inherit.
  const std::size_t ne = k * d + m * k;
  const std::size_t width = 2 * ne + 3;
  std::vector<double> per_path(n * width, 0.0);
  for_each_indexed(
      exec, n, [&] { return std::vector<double>(k); },
      [&](std::size_t p, std::vector<double>& proj) {
        double* row = per_path.data() + p * width;
        for (std::size_t i = 0; i < N; ++i) {
          for (std::size_t c = 0; c < k; ++c) {
            double s = 0.0;
            for (std::size_t q = 0; q < d; ++q)
              s += sol.z_at(p, i, c, q) * bundle.dw_at(p, i, q);
            for (std::size_t j = 0; j < m; ++j) {
              const double lam = bundle.model.marks.intensity(j);
              const double dpi =
                  static_cast<double>(bundle.count_at(p, i, j)) - lam * h;
              s += sol.v_at(p, i, j, c) * dpi;
            }
            proj[c] = s;
          }
          for (std::size_t c = 0; c < k; ++c) {
            const double dmv = sol.dm_at(p, i, c);
            for (std::size_t q = 0; q < d; ++q) {
              const double dw = bundle.dw_at(p, i, q);
              row[c * d + q] += dmv * dw;
              const double g = proj[c] * dw - sol.z_at(p, i, c, q) * h;
              row[ne + c * d + q] += g * g;
            }
            for (std::size_t j = 0; j < m; ++j) {
              const double lam = bundle.model.marks.intensity(j);
              const double dpi =
                  static_cast<double>(bundle.count_at(p, i, j)) - lam * h;
              row[k * d + j * k + c] += dmv * dpi;
              const double g = proj[c] * dpi - sol.v_at(p, i, j, c) * lam * h;
              row[ne + k * d + j * k + c] += g * g;
            }
            row[width - 3] += dmv * dmv;
            for (std::size_t q = 0; q < d; ++q) {
              const double zv = sol.z_at(p, i, c, q);
              row[width - 2] += zv * zv * h;
            }
            for (std::size_t j = 0; j < m; ++j) {
              const double lam = bundle.model.marks.intensity(j);
              const double vv = sol.v_at(p, i, j, c);
              row[width - 1] += lam * vv * vv * h;
            }
          }
        }
      });

  OrthoReport rep;
  std::vector<double> col(n);
  auto stat = [&](std::size_t w) {
    for (std::size_t p = 0; p < n; ++p) col[p] = per_path[p * width + w];
    const MeanSe ms = mean_se(col);
    return ChannelStat{ms.mean, ms.se};
  };
  auto channel = [&](std::size_t w) {
    ChannelStat ch = stat(w);
    for (std::size_t p = 0; p < n; ++p) col[p] = per_path[p * width + ne + w];
    const double qv = pairwise_sum(col) / static_cast<double>(n);
    ch.se = std::sqrt(ch.se * ch.se + qv / static_cast<double>(n));
    return ch;
  };
  for (std::size_t w = 0; w < k * d; ++w) rep.brownian.push_back(channel(w));
  for (std::size_t w = 0; w < m * k; ++w) rep.jumps.push_back(channel(k * d + w));
  rep.m_energy = stat(width - 3);
  rep.z_energy = stat(width - 2);
  rep.v_energy = stat(width - 1);
  return rep;
}

}  // namespace gbsde
