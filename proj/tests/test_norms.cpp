#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "gbsde/norms.hpp"
#include "gbsde/problem_library.hpp"
#include "gbsde/solver.hpp"

using namespace gbsde;

namespace {

NoiseModel one_atom_model(double lambda = 1.0) {
  NoiseModel model;
  model.brownian_dim = 1;
  model.marks = MarkSpace(1, {1.0}, {lambda});
  return model;
}

GBSDEProblem named(const std::string& name, const NoiseModel& model, auto&&... tweak) {
  ProblemParams params;
  params.name = name;
  (tweak(params), ...);
  return make_problem(params, model);
}

}  // namespace

TEST_CASE("ito constant alpha_p") {
  CHECK(alpha_p(2.0) == 2.0 / 3.0);
  CHECK(alpha_p(3.0) == 2.0 / 3.0);
  CHECK(alpha_p(4.0) == 4.0 / 9.0);
  CHECK_THROWS_AS(alpha_p(1.9), std::invalid_argument);
  CHECK_THROWS_AS(alpha_p(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);

  // the polynomial branch stays below p/2 on the whole range, so the min
  // never switches back
  for (double p = 2.0; p <= 12.0; p += 0.25) {
    const double poly = p * (p - 1.0) * std::pow(3.0, 1.0 - p);
    CHECK(poly <= p / 2.0 + 1e-15);
    CHECK(alpha_p(p) == doctest::Approx(poly).epsilon(1e-14));
  }
}

TEST_CASE("zero solution has zero norms and an unflagged zero ratio") {
  const TimeGrid grid(1.0, 8);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 5, 200);
  const GBSDEProblem prob = named("zero", model);
  const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});

  const NormReport rep = compute_norms(sol, prob, bundle, 2.0, 0.0);
  CHECK(rep.sp.mean == 0.0);
  CHECK(rep.mp.mean == 0.0);
  CHECK(rep.lp.mean == 0.0);
  CHECK(rep.m_bracket.mean == 0.0);
  CHECK(rep.data_xi.mean == 0.0);
  CHECK(rep.data_f.mean == 0.0);
  CHECK(rep.data_r.mean == 0.0);
  CHECK(rep.all_finite);

  const RatioReport ratio = apriori_ratio(sol, prob, bundle, 2.0, 0.0);
  CHECK(ratio.ratio == 0.0);
  CHECK_FALSE(ratio.flagged);
}

TEST_CASE("deterministic data give worked norm values") {
  const TimeGrid grid(1.0, 10);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 5, 150);

  SUBCASE("constant terminal") {
    const GBSDEProblem prob =
        named("zero", model, [](ProblemParams& p) { p.terminal.offset = -2.0; });
    const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});
    const NormReport rep = compute_norms(sol, prob, bundle, 3.0, 0.0);
    CHECK(rep.sp.mean == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(rep.sp.norm == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.data_xi.mean == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(rep.mp.mean <= 1e-20);

    // positive weight puts the sup at the horizon
    const NormReport weighted = compute_norms(sol, prob, bundle, 3.0, 0.5);
    CHECK(weighted.sp.mean == doctest::Approx(8.0 * std::exp(0.5 * 3.0)).epsilon(1e-12));
  }

  SUBCASE("constant driver ratio equals one") {
    const GBSDEProblem prob =
        named("constant_driver", model, [](ProblemParams& p) { p.driver_value = 1.0; });
    const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});
    const RatioReport ratio = apriori_ratio(sol, prob, bundle, 2.0, 0.0);
    // Y_i = T - t_i: sup power T^2 = 1; data side (sum |f| h)^2 = 1
    CHECK(ratio.lhs == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ratio.rhs == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ratio.ratio == doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(ratio.flagged);
  }
}

TEST_CASE("martingale solution satisfies the discrete isometry") {
  const TimeGrid grid(1.0, 16);
  NoiseModel model;
  model.brownian_dim = 1;
  const PathBundle bundle = simulate(grid, model, 303, 4000);
  const GBSDEProblem prob =
      named("zero", model, [](ProblemParams& p) { p.terminal.base = TerminalBase::w; });
  const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});

  const NormReport rep = compute_norms(sol, prob, bundle, 2.0, 0.0);
  CHECK(std::abs(rep.mp.mean - 1.0) <= 0.05);  // E int |Z|^2 dt = T with Z = 1
  CHECK(rep.mp.se > 0.0);
  CHECK(rep.all_finite);
  // E sup |Y|^2 at least E |xi|^2 = T
  CHECK(rep.sp.mean >= rep.data_xi.mean);
}

TEST_CASE("norms are p-homogeneous in the data") {
  const TimeGrid grid(1.0, 8);
  const NoiseModel model = one_atom_model(1.5);
  const PathBundle bundle = simulate(grid, model, 99, 600);
  auto scaled = [&](double s) {
    return named("zero", model, [&](ProblemParams& p) {
      p.terminal.base = TerminalBase::w;
      p.terminal.scale = s;
    });
  };
  const GBSDEProblem unit = scaled(1.0);
  const GBSDEProblem twice = scaled(2.0);
  const DiscreteSolution s1 = solve(unit, grid, bundle, SolverConfig{});
  const DiscreteSolution s2 = solve(twice, grid, bundle, SolverConfig{});

  const double p = 3.0;
  const NormReport r1 = compute_norms(s1, unit, bundle, p, 0.25);
  const NormReport r2 = compute_norms(s2, twice, bundle, p, 0.25);
  const double factor = std::pow(2.0, p);
  CHECK(r2.sp.mean == doctest::Approx(factor * r1.sp.mean).epsilon(1e-9));
  CHECK(r2.mp.mean == doctest::Approx(factor * r1.mp.mean).epsilon(1e-9));
  CHECK(r2.lp.mean == doctest::Approx(factor * r1.lp.mean).epsilon(1e-9));
  CHECK(r2.m_bracket.mean == doctest::Approx(factor * r1.m_bracket.mean).epsilon(1e-9));
  CHECK(r2.data_xi.mean == doctest::Approx(factor * r1.data_xi.mean).epsilon(1e-9));
}

TEST_CASE("weight monotonicity and the recommended floor") {
  const TimeGrid grid(1.0, 8);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 12, 500);
  const GBSDEProblem prob = named("linear", model, [](ProblemParams& p) {
    p.alpha = -0.5;
    p.beta = 0.3;
    p.terminal.base = TerminalBase::w;
  });
  const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});

  const NormReport flat = compute_norms(sol, prob, bundle, 2.0, 0.0);
  const NormReport grown = compute_norms(sol, prob, bundle, 2.0, 1.0);
  CHECK(grown.sp.mean >= flat.sp.mean);
  CHECK(grown.mp.mean >= flat.mp.mean);
  CHECK(grown.lp.mean >= flat.lp.mean);

  const double floor =
      prob.gen.mu + 2.0 * (prob.gen.lip_z * prob.gen.lip_z + prob.gen.lip_v * prob.gen.lip_v);
  CHECK_FALSE(compute_norms(sol, prob, bundle, 2.0, floor + 0.1).below_recommended_weight);
  CHECK(compute_norms(sol, prob, bundle, 2.0, floor - 0.1).below_recommended_weight);
}

TEST_CASE("stopping vector consistency") {
  const TimeGrid grid(1.0, 10);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 21, 400);
  const GBSDEProblem prob = named("linear", model, [](ProblemParams& p) {
    p.alpha = -0.5;
    p.terminal.base = TerminalBase::w;
  });
  const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});

  SUBCASE("tau at the horizon equals the unstopped report") {
    const std::vector<std::uint32_t> tau(bundle.n_paths, 10);
    const NormReport a = compute_norms(sol, prob, bundle, 2.0, 0.3);
    const NormReport b = compute_norms(sol, prob, bundle, 2.0, 0.3, tau);
    CHECK(a.sp.mean == b.sp.mean);
    CHECK(a.mp.mean == b.mp.mean);
    CHECK(a.lp.mean == b.lp.mean);
    CHECK(a.m_bracket.mean == b.m_bracket.mean);
    CHECK(a.data_xi.mean == b.data_xi.mean);
    CHECK(a.data_f.mean == b.data_f.mean);
  }

  SUBCASE("earlier stopping cannot grow the integral terms") {
    const std::vector<std::uint32_t> tau(bundle.n_paths, 5);
    const NormReport full = compute_norms(sol, prob, bundle, 2.0, 0.0);
    const NormReport cut = compute_norms(sol, prob, bundle, 2.0, 0.0, tau);
    CHECK(cut.mp.mean <= full.mp.mean);
    CHECK(cut.lp.mean <= full.lp.mean);
    CHECK(cut.m_bracket.mean <= full.m_bracket.mean);
    CHECK(cut.data_f.mean <= full.data_f.mean);
  }
}

TEST_CASE("variation of identical data is exactly zero") {
  const TimeGrid grid(1.0, 8);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 44, 500);
  const GBSDEProblem prob = named("linear", model, [](ProblemParams& p) {
    p.alpha = -0.5;
    p.beta = 0.3;
    p.gamma = 0.2;
    p.terminal.base = TerminalBase::w;
  });
  const DiscreteSolution sol = solve(prob, grid, bundle, SolverConfig{});

  const RatioReport rep = variation_ratio(sol, sol, prob, prob, bundle, 2.0, 0.0);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.rhs == 0.0);
  CHECK(rep.ratio == 0.0);
  CHECK_FALSE(rep.flagged);
}

TEST_CASE("terminal perturbation responds linearly") {
  const TimeGrid grid(1.0, 10);
  const NoiseModel model = one_atom_model();
  const PathBundle bundle = simulate(grid, model, 64, 800);
  auto shifted = [&](double eps) {
    return named("linear", model, [&](ProblemParams& p) {
      p.beta = 0.3;
      p.terminal.base = TerminalBase::w;
      p.terminal.offset = eps;
    });
  };
  const GBSDEProblem base = shifted(0.0);
  const DiscreteSolution sol0 = solve(base, grid, bundle, SolverConfig{});

  double scaled_norm[2] = {0.0, 0.0};
  const double eps[2] = {0.1, 0.01};
  for (int s = 0; s < 2; ++s) {
    const GBSDEProblem pert = shifted(eps[s]);
    const DiscreteSolution sol1 = solve(pert, grid, bundle, SolverConfig{});
    const RatioReport rep = variation_ratio(sol1, sol0, pert, base, bundle, 2.0, 0.0);
    CHECK(rep.f_part.mean == 0.0);  // same driver both sides
    CHECK(rep.xi_part.norm == doctest::Approx(eps[s]).epsilon(1e-10));
    scaled_norm[s] = rep.y_part.norm / eps[s];
  }
  CHECK(scaled_norm[0] == doctest::Approx(scaled_norm[1]).epsilon(1e-10));
}
