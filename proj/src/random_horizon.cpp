#include "gbsde/random_horizon.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gbsde/detail/solver_core.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {

std::vector<std::uint32_t> detect_tau(const PathBundle& bundle, const StoppingSpec& spec,
                                      Exec exec) {
  if (!spec.inside) throw std::invalid_argument("stopping rule needs a domain predicate");
  const std::size_t n = bundle.n_paths;
  const std::size_t N = bundle.steps;
  std::vector<std::uint32_t> tau(n, static_cast<std::uint32_t>(N));
  for_each_path(exec, n, [&](std::size_t p) {
    for (std::size_t i = 0; i < N; ++i) {
      if (!spec.inside(bundle.state_at(p, i))) {
        tau[p] = static_cast<std::uint32_t>(i);
        break;
      }
    }
  });
  return tau;
}

double weight_floor(const GBSDEProblem& prob) {
  const double l2 =
      prob.gen.lip_z * prob.gen.lip_z + prob.gen.lip_v * prob.gen.lip_v;
  return prob.gen.mu + 2.0 * prob.p * l2 / alpha_p(prob.p);
}

HorizonSolution solve_random_horizon(const GBSDEProblem& prob, const StoppingSpec& spec,
                                     const TimeGrid& grid, const PathBundle& bundle,
                                     const SolverConfig& cfg, Exec exec) {
  HorizonSolution out;
  out.nu = weight_floor(prob);
  if (!(spec.rho > out.nu))
    throw std::invalid_argument("stopping weight rho must exceed the problem floor nu");
  out.tau = detect_tau(bundle, spec, exec);

  detail::CoreArgs args;
  args.prob = &prob;
  args.grid = &grid;
  args.bundle = &bundle;
  args.cfg = &cfg;
  args.tau = out.tau;
  args.exec = exec;
  out.sol = detail::solve_core(args);

  const std::size_t n = bundle.n_paths;
  const std::size_t k = prob.k;
  out.xi.resize(n * k);
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t c = 0; c < k; ++c) out.xi[p * k + c] = out.sol.y_at(p, out.tau[p], c);

  // xi proxy: conditional expectation of the terminal data alone, solved as
  // the driverless problem on an R-free view of the same bundle
  GBSDEProblem bare = prob;
  bare.gen = GeneratorSpec{};
  bare.gen.f = [k](double, std::span<const double>, std::span<const double>,
                   std::span<const double>, std::span<double> f_out) {
    for (std::size_t c = 0; c < k; ++c) f_out[c] = 0.0;
  };
  PathBundle stripped = bundle;
  stripped.dr.clear();
  stripped.dr_abs.clear();
  detail::CoreArgs proxy_args;
  proxy_args.prob = &bare;
  proxy_args.grid = &grid;
  proxy_args.bundle = &stripped;
  proxy_args.cfg = &cfg;
  proxy_args.tau = out.tau;
  proxy_args.xi = out.xi;
  proxy_args.exec = exec;
  out.xi_proxy = detail::solve_core(proxy_args).y;
  return out;
}

RatioReport weighted_norm_report(const HorizonSolution& hsol, const GBSDEProblem& prob,
                                 const PathBundle& bundle, double p, double rho, Exec exec) {
  if (!(rho > hsol.nu))
    throw std::invalid_argument("stopping weight rho must exceed the problem floor nu");
  return apriori_ratio(hsol.sol, prob, bundle, p, rho, hsol.tau, exec);
}

std::vector<ExtensionLevel> horizon_extension(const GBSDEProblem& prob,
                                              const StoppingSpec& spec,
                                              const NoiseModel& model, const SolverConfig& cfg,
                                              std::span<const double> caps, double dt,
                                              std::uint64_t seed, std::size_t n_paths,
                                              Exec exec) {
  if (caps.empty()) throw std::invalid_argument("horizon extension needs at least one cap");
  if (!(dt > 0.0)) throw std::invalid_argument("step size must be positive");
  std::vector<std::size_t> steps(caps.size());
  for (std::size_t l = 0; l < caps.size(); ++l) {
    const double ratio = caps[l] / dt;
    steps[l] = static_cast<std::size_t>(std::llround(ratio));
    if (steps[l] < 1 || std::abs(ratio - static_cast<double>(steps[l])) > 1e-9)
      throw std::invalid_argument("caps must be integer multiples of the step size");
    if (l > 0 && caps[l] <= caps[l - 1])
      throw std::invalid_argument("caps must be strictly increasing");
  }

  std::vector<ExtensionLevel> out(caps.size());
  DiscreteSolution prev_sol;
  std::size_t prev_steps = 0;
  for (std::size_t l = 0; l < caps.size(); ++l) {
    const TimeGrid grid(caps[l], steps[l]);
    // one seed for all levels: equal dt plus the fixed per-step draw order
    // make the shorter bundles exact prefixes of the longer ones
    const PathBundle bundle = simulate(grid, model, seed, n_paths, exec);
    const HorizonSolution hsol = solve_random_horizon(prob, spec, grid, bundle, cfg, exec);

    ExtensionLevel& lev = out[l];
    lev.cap = caps[l];
    lev.steps = steps[l];
    const SolveSummary sum = solution_summary(hsol.sol, prob, bundle, hsol.tau, exec);
    lev.y0 = sum.y0[0];
    lev.se = sum.se[0];

    std::vector<double> tau_time(n_paths);
    std::size_t stopped = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      tau_time[p] = grid.node(hsol.tau[p]);
      if (hsol.tau[p] < steps[l]) ++stopped;
    }
    lev.mean_tau = pairwise_sum(tau_time) / static_cast<double>(n_paths);
    lev.stopped_fraction = static_cast<double>(stopped) / static_cast<double>(n_paths);

    if (l > 0) {
      const std::size_t k = prob.k;
      std::vector<double> sup(n_paths, 0.0);
      const DiscreteSolution& cur = hsol.sol;
      for_each_path(exec, n_paths, [&](std::size_t p) {
        double worst = 0.0;
        for (std::size_t i = 0; i <= prev_steps; ++i) {
          double g2 = 0.0;
          for (std::size_t c = 0; c < k; ++c) {
            const double g = cur.y_at(p, i, c) - prev_sol.y_at(p, i, c);
            g2 += g * g;
          }
          worst = std::max(worst, g2);
        }
        sup[p] = worst;
      });
      lev.decrement = std::sqrt(pairwise_sum(sup) / static_cast<double>(n_paths));
    }
    prev_sol = std::move(hsol.sol);
    prev_steps = steps[l];
  }
  return out;
}

}  // namespace gbsde
