#include "gbsde/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gbsde/detail/solver_core.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {

double alpha_p(double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("alpha_p needs p >= 2");
  return std::min(p / 2.0, p * (p - 1.0) * std::pow(3.0, 1.0 - p));
}

namespace {

struct CoreArgs {
  const DiscreteSolution* sol = nullptr;
  const MarkSpace* marks = nullptr;
  std::span<const double> xi;      // n * k
  std::span<const double> f_node;  // size N (shared) or n * N (per path); empty = 0
  std::span<const double> r_abs;   // n * N; empty = 0
  double p = 2.0;
  double a = 0.0;
  std::span<const std::uint32_t> tau;
  Exec exec = Exec::parallel;
};

Functional finish(std::span<const double> per_path, double p) {
  const MeanSe ms = mean_se(per_path);
  Functional f;
  f.mean = ms.mean;
  f.se = ms.se;
  f.norm = ms.mean > 0.0 ? std::pow(ms.mean, 1.0 / p) : 0.0;
  return f;
}

NormReport norm_core(const CoreArgs& args) {
  const DiscreteSolution& sol = *args.sol;
  const std::size_t n = sol.n_paths;
  const std::size_t N = sol.steps;
  const std::size_t k = sol.k;
  const std::size_t d = sol.d;
  const std::size_t m = sol.m;
  const double h = sol.horizon / static_cast<double>(N);
  const double p = args.p;
  const double a = args.a;
  const bool f_shared = args.f_node.size() == N;

  std::vector<double> sp(n), mp(n), lp(n), mb(n), dxi(n), df(n), dr(n);
  for_each_path(args.exec, n, [&](std::size_t pa) {
    const std::size_t tp = args.tau.empty() ? N : std::min<std::size_t>(args.tau[pa], N);
    const double t_stop = h * static_cast<double>(tp);
    const double w_stop = std::exp(a * p * t_stop);

    double sup = 0.0;
    for (std::size_t i = 0; i <= N; ++i) {
      const double t = std::min(h * static_cast<double>(i), t_stop);
      double y2 = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double y = sol.y_at(pa, i, c);
        y2 += y * y;
      }
      sup = std::max(sup, std::exp(a * p * t) * std::pow(y2, p / 2.0));
    }
    sp[pa] = sup;

    double zsum = 0.0, vsum = 0.0, msum = 0.0, fsum = 0.0, rsum = 0.0;
    for (std::size_t i = 0; i < tp; ++i) {
      const double t = h * static_cast<double>(i);
      const double w2 = std::exp(2.0 * a * t);
      const double w1 = std::exp(a * t);
      double z2 = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t q = 0; q < d; ++q) {
          const double z = sol.z_at(pa, i, c, q);
          z2 += z * z;
        }
      zsum += w2 * z2 * h;
      double v2 = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double lam = args.marks->intensity(j);
        for (std::size_t c = 0; c < k; ++c) {
          const double v = sol.v_at(pa, i, j, c);
          v2 += lam * v * v;
        }
      }
      vsum += w2 * v2 * h;
      for (std::size_t c = 0; c < k; ++c) {
        const double dm = sol.dm_at(pa, i, c);
        msum += dm * dm;
      }
      if (!args.f_node.empty())
        fsum += w1 * (f_shared ? args.f_node[i] : args.f_node[pa * N + i]) * h;
      if (!args.r_abs.empty()) rsum += w1 * args.r_abs[pa * N + i];
    }
    mp[pa] = std::pow(zsum, p / 2.0);
    lp[pa] = std::pow(vsum, p / 2.0);
    mb[pa] = w_stop * std::pow(msum, p / 2.0);
    double xi2 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double x = args.xi[pa * k + c];
      xi2 += x * x;
    }
    dxi[pa] = w_stop * std::pow(xi2, p / 2.0);
    df[pa] = std::pow(fsum, p);
    dr[pa] = std::pow(rsum, p);
  });

  NormReport rep;
  rep.p = p;
  rep.a = a;
  rep.sp = finish(sp, p);
  rep.mp = finish(mp, p);
  rep.lp = finish(lp, p);
  rep.m_bracket = finish(mb, p);
  rep.data_xi = finish(dxi, p);
  rep.data_f = finish(df, p);
  rep.data_r = finish(dr, p);
  for (const Functional* f :
       {&rep.sp, &rep.mp, &rep.lp, &rep.m_bracket, &rep.data_xi, &rep.data_f, &rep.data_r})
    if (!std::isfinite(f->mean) || !std::isfinite(f->se)) rep.all_finite = false;
  return rep;
}

// Terminal values read off the frozen nodes of the solution.
std::vector<double> stopped_values(const DiscreteSolution& sol,
                                   std::span<const std::uint32_t> tau) {
  const std::size_t n = sol.n_paths;
  const std::size_t k = sol.k;
  std::vector<double> xi(n * k);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t tp = tau.empty() ? sol.steps : std::min<std::size_t>(tau[p], sol.steps);
    for (std::size_t c = 0; c < k; ++c) xi[p * k + c] = sol.y_at(p, tp, c);
  }
  return xi;
}

// Effective |dR| per (path, step) after the variation cap.
std::vector<double> effective_r_abs(const GBSDEProblem& prob, const PathBundle& bundle) {
  if (bundle.dr_abs.empty()) return {};
  const std::size_t n = bundle.n_paths;
  const std::size_t N = bundle.steps;
  std::vector<double> out(n * N, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    double running = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      out[p * N + i] =
          std::abs(detail::effective_dr(bundle, p, i, prob.r_variation_cap, running));
      running += bundle.dr_abs_at(p, i);
    }
  }
  return out;
}

double recommended_floor(const GBSDEProblem& prob) {
  return prob.gen.mu + 2.0 * (prob.gen.lip_z * prob.gen.lip_z + prob.gen.lip_v * prob.gen.lip_v);
}

RatioReport to_ratio(const NormReport& rep) {
  RatioReport r;
  r.y_part = rep.sp;
  r.z_part = rep.mp;
  r.v_part = rep.lp;
  r.m_part = rep.m_bracket;
  r.xi_part = rep.data_xi;
  r.f_part = rep.data_f;
  r.r_part = rep.data_r;
  r.lhs = rep.sp.mean + rep.mp.mean + rep.lp.mean + rep.m_bracket.mean;
  r.rhs = rep.data_xi.mean + rep.data_f.mean + rep.data_r.mean;
  if (r.rhs > 0.0) {
    r.ratio = r.lhs / r.rhs;
  } else {
    r.ratio = 0.0;
    r.flagged = r.lhs > 1e-12;
  }
  return r;
}

}  // namespace

NormReport compute_norms(const DiscreteSolution& sol, const GBSDEProblem& prob,
                         const PathBundle& bundle, double p, double a,
                         std::span<const std::uint32_t> tau, Exec exec) {
  if (!(p >= 1.0)) throw std::invalid_argument("norm order must be >= 1");
  const std::vector<double> xi = stopped_values(sol, tau);
  std::vector<double> f_node(sol.steps);
  const Dims dims{sol.k, sol.d, sol.m};
  const double h = sol.horizon / static_cast<double>(sol.steps);
  for (std::size_t i = 0; i < sol.steps; ++i)
    f_node[i] = f0_norm_at(prob.gen, dims, h * static_cast<double>(i));
  const std::vector<double> r_abs = effective_r_abs(prob, bundle);

  CoreArgs args;
  args.sol = &sol;
  args.marks = &bundle.model.marks;
  args.xi = xi;
  args.f_node = f_node;
  args.r_abs = r_abs;
  args.p = p;
  args.a = a;
  args.tau = tau;
  args.exec = exec;
  NormReport rep = norm_core(args);
  rep.below_recommended_weight = a < recommended_floor(prob) - 1e-12;
  return rep;
}

RatioReport apriori_ratio(const DiscreteSolution& sol, const GBSDEProblem& prob,
                          const PathBundle& bundle, double p, double a,
                          std::span<const std::uint32_t> tau, Exec exec) {
  return to_ratio(compute_norms(sol, prob, bundle, p, a, tau, exec));
}

RatioReport variation_ratio(const DiscreteSolution& sol_a, const DiscreteSolution& sol_b,
                            const GBSDEProblem& prob_a, const GBSDEProblem& prob_b,
                            const PathBundle& bundle, double p, double a,
                            std::span<const std::uint32_t> tau, Exec exec) {
  if (sol_a.n_paths != sol_b.n_paths || sol_a.steps != sol_b.steps || sol_a.k != sol_b.k ||
      sol_a.d != sol_b.d || sol_a.m != sol_b.m)
    throw std::invalid_argument("variation_ratio needs solutions of identical shape");
  const std::size_t n = sol_a.n_paths;
  const std::size_t N = sol_a.steps;
  const std::size_t k = sol_a.k;
  const std::size_t d = sol_a.d;
  const std::size_t m = sol_a.m;
  const double h = sol_a.horizon / static_cast<double>(N);

  DiscreteSolution diff;
  diff.n_paths = n;
  diff.steps = N;
  diff.k = k;
  diff.d = d;
  diff.m = m;
  diff.horizon = sol_a.horizon;
  auto subtract = [](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
    return out;
  };
  diff.y = subtract(sol_a.y, sol_b.y);
  diff.z = subtract(sol_a.z, sol_b.z);
  diff.v = subtract(sol_a.v, sol_b.v);
  diff.dm = subtract(sol_a.dm, sol_b.dm);

  const std::vector<double> xi = stopped_values(diff, tau);

  // driver difference along solution b
  std::vector<double> f_gap(n * N, 0.0);
  FirstError err;
  for_each_indexed(
      exec, n,
      [&] {
        return std::pair<std::vector<double>, std::vector<double>>(std::vector<double>(k),
                                                                   std::vector<double>(k));
      },
      [&](std::size_t pa, auto& ws) {
        err.run([&] {
          const std::size_t tp =
              tau.empty() ? N : std::min<std::size_t>(tau[pa], N);
          for (std::size_t i = 0; i < tp; ++i) {
            const double t = h * static_cast<double>(i);
            std::span<const double> yb{sol_b.y.data() + (pa * (N + 1) + i) * k, k};
            std::span<const double> zb{sol_b.z.data() + (pa * N + i) * k * d, k * d};
            std::span<const double> vb{sol_b.v.data() + (pa * N + i) * m * k, m * k};
            evaluate(prob_a.gen, t, yb, zb, vb, ws.first);
            evaluate(prob_b.gen, t, yb, zb, vb, ws.second);
            double g2 = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
              const double g = ws.first[c] - ws.second[c];
              g2 += g * g;
            }
            f_gap[pa * N + i] = std::sqrt(g2);
          }
        });
      });
  err.rethrow_if_failed();

  // R difference from the effective increments of each problem
  const std::vector<double> ra = effective_r_abs(prob_a, bundle);
  const std::vector<double> rb = effective_r_abs(prob_b, bundle);
  std::vector<double> r_gap;
  if (!ra.empty() || !rb.empty()) {
    r_gap.assign(n * N, 0.0);
    for (std::size_t p2 = 0; p2 < n; ++p2) {
      double run_a = 0.0, run_b = 0.0;
      for (std::size_t i = 0; i < N; ++i) {
        const double da = detail::effective_dr(bundle, p2, i, prob_a.r_variation_cap, run_a);
        const double db = detail::effective_dr(bundle, p2, i, prob_b.r_variation_cap, run_b);
        run_a += bundle.dr_abs_at(p2, i);
        run_b += bundle.dr_abs_at(p2, i);
        r_gap[p2 * N + i] = std::abs(da - db);
      }
    }
  }

  CoreArgs args;
  args.sol = &diff;
  args.marks = &bundle.model.marks;
  args.xi = xi;
  args.f_node = f_gap;
  args.r_abs = r_gap;
  args.p = p;
  args.a = a;
  args.tau = tau;
  args.exec = exec;
  return to_ratio(norm_core(args));
}

}  // namespace gbsde
