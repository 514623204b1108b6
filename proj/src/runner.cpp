#include "gbsde/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "gbsde/comparison.hpp"
#include "gbsde/csv.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/linear_oracle.hpp"
#include "gbsde/norms.hpp"
#include "gbsde/random_horizon.hpp"
#include "gbsde/stats.hpp"

namespace gbsde {

namespace {

struct VerbContext {
  const ExperimentConfig& cfg;
  NoiseModel model;
  TimeGrid grid;
  std::uint64_t hash;
  bool check;

  explicit VerbContext(const ExperimentConfig& c, bool chk)
      : cfg(c), model(build_noise(c.noise)), grid(build_grid(c)), hash(config_hash(c)),
        check(chk) {
    std::filesystem::create_directories(c.run.out);
  }

  std::string path(const std::string& name) const {
    return (std::filesystem::path(cfg.run.out) / name).string();
  }
  Exec exec() const { return cfg.run.exec; }
  std::uint64_t seed() const { return cfg.run.seed; }
  std::size_t paths() const { return cfg.run.paths; }

  /// Oracle coefficients: an explicit [oracle] section wins; otherwise a
  /// linear problem supplies them (scalars broadcast over channels).
  LinearCoefficients oracle() const {
    LinearCoefficients c = cfg.oracle;
    if (c.beta.empty() && c.gamma.empty() && cfg.problem.name == "linear") {
      c.alpha = cfg.problem.alpha;
      c.forcing = cfg.problem.f0;
      c.beta.assign(model.brownian_dim, cfg.problem.beta);
      c.gamma.assign(model.atom_count(), cfg.problem.gamma);
    } else {
      if (c.beta.empty()) c.beta.assign(model.brownian_dim, 0.0);
      if (c.gamma.empty()) c.gamma.assign(model.atom_count(), 0.0);
    }
    return c;
  }
};

void require(bool ok, const std::string& what) {
  if (!ok) throw CheckFailure("check failed: " + what);
}

void verb_simulate(const VerbContext& vc) {
  const PathBundle bundle = simulate(vc.grid, vc.model, vc.seed(), vc.paths(), vc.exec());
  {
    std::ofstream out(vc.path("bundle.csv"));
    if (!out) throw std::runtime_error("cannot open output file");
    dump_bundle_csv(bundle, out);
    out << "# config-hash = " << hex64(vc.hash) << '\n';
  }
  if (vc.check) {
    std::ifstream in(vc.path("bundle.csv"));
    const PathBundle back = restore_bundle_csv(in, vc.model);
    require(back == bundle, "bundle csv round trip must be exact");
  }
}

void verb_solve(const VerbContext& vc) {
  const GBSDEProblem prob = make_problem(vc.cfg.problem, vc.model);
  const PathBundle bundle = simulate(vc.grid, vc.model, vc.seed(), vc.paths(), vc.exec());
  const DiscreteSolution sol = solve(prob, vc.grid, bundle, vc.cfg.solver, vc.exec());
  const SolveSummary sum = solution_summary(sol, prob, bundle, {}, vc.exec());
  const OrthoReport ortho = orthogonality_report(sol, bundle, vc.exec());

  {
    CsvWriter w(vc.path("solve_nodes.csv"), vc.hash);
    w.header({"node", "t", "mean_y", "residual_rms", "n_basis", "n_active", "cond_ratio",
              "picard_iters"});
    std::vector<double> col(sol.n_paths);
    for (std::size_t i = 0; i < sol.steps; ++i) {
      for (std::size_t p = 0; p < sol.n_paths; ++p) col[p] = sol.y_at(p, i);
      const NodeDiag& dg = sol.node_diag[i];
      w.row({static_cast<double>(i), vc.grid.node(i),
             pairwise_sum(col) / static_cast<double>(sol.n_paths), dg.residual_rms,
             static_cast<double>(dg.n_basis), static_cast<double>(dg.n_active), dg.cond_ratio,
             static_cast<double>(dg.picard_iters)});
    }
  }

  double worst_t = 0.0;
  for (const auto& group : {ortho.brownian, ortho.jumps})
    for (const ChannelStat& ch : group)
      if (ch.se > 0.0) worst_t = std::max(worst_t, std::abs(ch.mean) / ch.se);
  {
    CsvWriter w(vc.path("solve_summary.csv"), vc.hash);
    w.header({"y0", "se", "paths", "trunc_radius", "truncation_active", "m_energy",
              "z_energy", "v_energy", "worst_ortho_tstat"});
    w.row({sum.y0[0], sum.se[0], static_cast<double>(vc.paths()), sol.trunc_radius,
           sol.truncation_active ? 1.0 : 0.0, ortho.m_energy.mean, ortho.z_energy.mean,
           ortho.v_energy.mean, worst_t});
  }
  if (vc.check) {
    require(std::isfinite(sum.y0[0]) && std::isfinite(sum.se[0]), "summary must be finite");
    require(worst_t <= 5.0, "martingale residual must be orthogonal to the noise channels");
  }
}

void verb_oracle(const VerbContext& vc) {
  const LinearCoefficients coeff = vc.oracle();
  validate(coeff, vc.model);
  const TerminalFn terminal = make_terminal(vc.cfg.problem.terminal, vc.model);
  const OracleEstimate est =
      linear_y0(coeff, terminal, vc.model, vc.grid, vc.seed(), vc.paths(), vc.exec());

  CsvWriter w(vc.path("oracle.csv"), vc.hash);
  std::vector<std::string> names{"value", "se", "paths", "min_gamma", "mean_gamma_horizon",
                                 "se_gamma_horizon", "alpha", "forcing"};
  std::vector<double> vals{est.value,
                           est.se,
                           static_cast<double>(est.n_paths),
                           est.min_gamma,
                           est.mean_gamma_horizon,
                           est.se_gamma_horizon,
                           coeff.alpha,
                           coeff.forcing};
  for (std::size_t q = 0; q < coeff.beta.size(); ++q) {
    names.push_back("beta" + std::to_string(q));
    vals.push_back(coeff.beta[q]);
  }
  for (std::size_t j = 0; j < coeff.gamma.size(); ++j) {
    names.push_back("gamma" + std::to_string(j));
    vals.push_back(coeff.gamma[j]);
  }
  w.header(names);
  w.row(vals);

  if (vc.check) {
    require(est.min_gamma >= 0.0, "stochastic exponential must stay nonnegative");
    const double target = std::exp(coeff.alpha * vc.grid.horizon());
    require(std::abs(est.mean_gamma_horizon - target) <=
                5.0 * est.se_gamma_horizon + 1e-12,
            "mean of the stochastic exponential must match exp(alpha T)");
  }
}

void verb_compare(const VerbContext& vc) {
  if (!vc.cfg.problem2) throw ConfigError({"compare needs a [problem2] section"});
  ComparisonCase cmp;
  cmp.name = vc.cfg.problem.name + "_vs_" + vc.cfg.problem2->name;
  cmp.low = make_problem(vc.cfg.problem, vc.model);
  cmp.high = make_problem(*vc.cfg.problem2, vc.model);
  cmp.r_scale_low = vc.cfg.compare.r_scale_low;
  cmp.r_scale_high = vc.cfg.compare.r_scale_high;

  const PathBundle bundle = simulate(vc.grid, vc.model, vc.seed(), vc.paths(), vc.exec());
  const ComparisonReport rep =
      run_comparison(cmp, vc.grid, bundle, vc.cfg.solver, vc.exec());

  {
    CsvWriter w(vc.path("compare.csv"), vc.hash);
    w.header({"node", "t", "min_gap", "max_pos_part", "tol", "structural", "within_noise"});
    for (const NodeGapRow& row : rep.nodes)
      w.row({static_cast<double>(row.node), vc.grid.node(row.node), row.min_gap,
             row.max_pos_part, row.tol, static_cast<double>(row.structural),
             static_cast<double>(row.within_noise)});
  }
  {
    CsvWriter w(vc.path("compare_summary.csv"), vc.hash);
    w.header({"max_positive_part", "structural_fraction", "noise_fraction", "gap_at_zero",
              "gap_at_zero_se", "terminal_slack", "driver_slack", "r_slack", "pass"});
    w.row({rep.max_positive_part, rep.structural_fraction, rep.noise_fraction,
           rep.gap_at_zero, rep.gap_at_zero_se, rep.order.terminal.min_slack,
           rep.order.driver.min_slack,
           rep.order.r_increments.checked ? rep.order.r_increments.min_slack : 0.0,
           rep.pass ? 1.0 : 0.0});
  }
  if (vc.check) {
    require(rep.order.pass(), "ordering hypotheses must hold on the sampled data");
    require(rep.pass, "no structural comparison violation is allowed");
  }
}

void verb_estimate(const VerbContext& vc) {
  const GBSDEProblem prob = make_problem(vc.cfg.problem, vc.model);
  const PathBundle bundle = simulate(vc.grid, vc.model, vc.seed(), vc.paths(), vc.exec());
  const DiscreteSolution sol = solve(prob, vc.grid, bundle, vc.cfg.solver, vc.exec());
  // smallest weight the estimate is asserted at
  const double a =
      prob.gen.mu + 2.0 * (prob.gen.lip_z * prob.gen.lip_z + prob.gen.lip_v * prob.gen.lip_v);
  const NormReport rep = compute_norms(sol, prob, bundle, prob.p, a, {}, vc.exec());
  const RatioReport ratio = apriori_ratio(sol, prob, bundle, prob.p, a, {}, vc.exec());

  {
    CsvWriter w(vc.path("estimate_norms.csv"), vc.hash);
    w.header({"functional", "mean", "se", "norm"});
    const std::pair<const char*, const Functional*> rows[] = {
        {"sp", &rep.sp},           {"mp", &rep.mp},
        {"lp", &rep.lp},           {"m_bracket", &rep.m_bracket},
        {"data_xi", &rep.data_xi}, {"data_f", &rep.data_f},
        {"data_r", &rep.data_r}};
    for (const auto& [name, f] : rows) {
      std::vector<std::string> cells{name, format_double(f->mean), format_double(f->se),
                                     format_double(f->norm)};
      w.row_of_strings(cells);
    }
  }
  {
    CsvWriter w(vc.path("estimate_ratio.csv"), vc.hash);
    w.header({"p", "a", "lhs", "rhs", "ratio", "flagged"});
    w.row({rep.p, rep.a, ratio.lhs, ratio.rhs, ratio.ratio, ratio.flagged ? 1.0 : 0.0});
  }
  if (vc.check) {
    require(rep.all_finite, "norm functionals must be finite");
    require(!ratio.flagged, "estimate must not show mass with zero data");
  }
}

void verb_random_horizon(const VerbContext& vc) {
  const GBSDEProblem prob = make_problem(vc.cfg.problem, vc.model);
  const StoppingSpec spec = build_stopping(vc.cfg.stopping);

  CsvWriter w(vc.path("random_horizon.csv"), vc.hash);
  w.header({"cap", "steps", "y0", "se", "mean_tau", "stopped_fraction", "decrement", "lhs",
            "rhs", "ratio"});

  if (vc.cfg.stopping.caps.empty()) {
    const PathBundle bundle = simulate(vc.grid, vc.model, vc.seed(), vc.paths(), vc.exec());
    const HorizonSolution hsol =
        solve_random_horizon(prob, spec, vc.grid, bundle, vc.cfg.solver, vc.exec());
    const SolveSummary sum = solution_summary(hsol.sol, prob, bundle, hsol.tau, vc.exec());
    const RatioReport ratio =
        weighted_norm_report(hsol, prob, bundle, prob.p, spec.rho, vc.exec());
    std::vector<double> tau_time(vc.paths());
    std::size_t stopped = 0;
    for (std::size_t p = 0; p < vc.paths(); ++p) {
      tau_time[p] = vc.grid.node(hsol.tau[p]);
      if (hsol.tau[p] < vc.grid.steps()) ++stopped;
    }
    w.row({vc.grid.horizon(), static_cast<double>(vc.grid.steps()), sum.y0[0], sum.se[0],
           pairwise_sum(tau_time) / static_cast<double>(vc.paths()),
           static_cast<double>(stopped) / static_cast<double>(vc.paths()), 0.0, ratio.lhs,
           ratio.rhs, ratio.ratio});
    if (vc.check) {
      // freeze invariant, asserted bitwise
      for (std::size_t p = 0; p < hsol.sol.n_paths; ++p)
        for (std::size_t i = hsol.tau[p]; i <= hsol.sol.steps; ++i)
          require(hsol.sol.y_at(p, i) == hsol.xi[p],
                  "solution must stay frozen to xi after tau");
    }
    return;
  }

  const double dt = vc.grid.dt();
  const std::vector<ExtensionLevel> levels =
      horizon_extension(prob, spec, vc.model, vc.cfg.solver, vc.cfg.stopping.caps, dt,
                        vc.seed(), vc.paths(), vc.exec());
  for (const ExtensionLevel& lev : levels)
    w.row({lev.cap, static_cast<double>(lev.steps), lev.y0, lev.se, lev.mean_tau,
           lev.stopped_fraction, lev.decrement, 0.0, 0.0, 0.0});
  if (vc.check) {
    for (std::size_t l = 2; l < levels.size(); ++l)
      require(levels[l].decrement <= levels[l - 1].decrement + 1e-12,
              "horizon-extension decrements must be nonincreasing");
  }
}

void verb_convergence(const VerbContext& vc) {
  if (vc.cfg.convergence_steps.empty())
    throw ConfigError({"convergence needs a [convergence] steps list"});
  const LinearCoefficients coeff = vc.oracle();
  validate(coeff, vc.model);
  const TerminalFn terminal = make_terminal(vc.cfg.problem.terminal, vc.model);
  const GBSDEProblem prob = make_problem(vc.cfg.problem, vc.model);

  // oracle once, on its own noise and the finest grid
  const std::size_t n_max =
      *std::max_element(vc.cfg.convergence_steps.begin(), vc.cfg.convergence_steps.end());
  const TimeGrid fine(vc.grid.horizon(), n_max);
  const OracleEstimate oracle = linear_y0(coeff, terminal, vc.model, fine,
                                          vc.seed() + 1, vc.paths(), vc.exec());

  CsvWriter w(vc.path("convergence.csv"), vc.hash);
  w.header({"steps", "y0", "se", "oracle", "oracle_se", "abs_err"});
  std::vector<double> errs;
  std::vector<double> ses;
  for (const std::size_t n : vc.cfg.convergence_steps) {
    const TimeGrid grid(vc.grid.horizon(), n);
    const PathBundle bundle = simulate(grid, vc.model, vc.seed(), vc.paths(), vc.exec());
    const DiscreteSolution sol = solve(prob, grid, bundle, vc.cfg.solver, vc.exec());
    const SolveSummary sum = solution_summary(sol, prob, bundle, {}, vc.exec());
    const double err = std::abs(sum.y0[0] - oracle.value);
    errs.push_back(err);
    ses.push_back(sum.se[0]);
    w.row({static_cast<double>(n), sum.y0[0], sum.se[0], oracle.value, oracle.se, err});
  }
  if (vc.check && errs.size() >= 2) {
    const double slack =
        3.0 * std::sqrt(ses.front() * ses.front() + ses.back() * ses.back() +
                        oracle.se * oracle.se);
    require(errs.back() <= errs.front() + slack,
            "refining the grid must not worsen the oracle gap beyond noise");
  }
}

}  // namespace

int run_verb(const std::string& verb, const ExperimentConfig& cfg, bool check) {
  try {
    VerbContext vc(cfg, check);
    if (verb == "simulate")
      verb_simulate(vc);
    else if (verb == "solve")
      verb_solve(vc);
    else if (verb == "oracle")
      verb_oracle(vc);
    else if (verb == "compare")
      verb_compare(vc);
    else if (verb == "estimate")
      verb_estimate(vc);
    else if (verb == "random-horizon")
      verb_random_horizon(vc);
    else if (verb == "convergence")
      verb_convergence(vc);
    else
      throw ConfigError({"unknown verb " + verb});
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const CheckFailure& e) {
    std::cerr << e.what() << '\n';
    return kExitCheck;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace gbsde
