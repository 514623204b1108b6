#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "gbsde/generator.hpp"
#include "gbsde/problem_library.hpp"

using namespace gbsde;

namespace {

NoiseModel one_atom_model(double lambda = 1.0) {
  NoiseModel model;
  model.brownian_dim = 1;
  model.marks = MarkSpace(1, {1.0}, {lambda});
  return model;
}

}  // namespace

TEST_CASE("evaluate worked cases") {
  const NoiseModel model = one_atom_model(2.0);
  std::vector<double> out(1);

  GeneratorSpec decay;
  decay.f = [](double, std::span<const double> y, std::span<const double>,
               std::span<const double>, std::span<double> o) { o[0] = -y[0]; };
  std::vector<double> y{3.0}, z{0.5}, v{0.25};
  evaluate(decay, 0.0, y, z, v, out);
  CHECK(out[0] == -3.0);

  GeneratorSpec constant;
  constant.f = [](double, std::span<const double>, std::span<const double>,
                  std::span<const double>, std::span<double> o) { o[0] = 4.5; };
  evaluate(constant, 0.7, y, z, v, out);
  CHECK(out[0] == 4.5);

  // f = -y^3 + z + integral v kappa dlambda with kappa = 0.5 on one atom
  // (lambda 2): hand value at y = 2, z = 0.5, v = 0.25 is
  //   -8 + 0.5 + 2 * 0.25 * 0.5 = -7.25
  GeneratorSpec mixed;
  mixed.f = [&model](double, std::span<const double> y2, std::span<const double> z2,
                     std::span<const double> v2, std::span<double> o) {
    double jump = 0.0;
    for (std::size_t j = 0; j < model.atom_count(); ++j)
      jump += model.marks.intensity(j) * v2[j] * 0.5;
    o[0] = -y2[0] * y2[0] * y2[0] + z2[0] + jump;
  };
  y[0] = 2.0;
  evaluate(mixed, 0.0, y, z, v, out);
  CHECK(out[0] == doctest::Approx(-7.25).epsilon(1e-15));

  GeneratorSpec bad;
  bad.f = [](double, std::span<const double>, std::span<const double>,
             std::span<const double>, std::span<double> o) {
    o[0] = std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS(evaluate(bad, 0.0, y, z, v, out));
}

TEST_CASE("truncate worked cases and lipschitz property") {
  CHECK(truncate(3.0, 2.0) == 2.0);
  CHECK(truncate(-1.0, 2.0) == -1.0);

  std::vector<double> x{3.0, 4.0}, out(2);
  truncate(x, 5.0, out);  // |x| = 5 exactly: identity
  CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(4.0).epsilon(1e-15));

  truncate(x, 2.5, out);  // scaled to radius 2.5, direction kept
  CHECK(std::hypot(out[0], out[1]) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(out[0] / out[1] == doctest::Approx(0.75).epsilon(1e-12));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  std::vector<double> a(3), b(3), ta(3), tb(3);
  for (int rep = 0; rep < 500; ++rep) {
    double d2 = 0.0, td2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      a[c] = unif(rng);
      b[c] = unif(rng);
    }
    truncate(a, 1.5, ta);
    truncate(b, 1.5, tb);
    for (int c = 0; c < 3; ++c) {
      d2 += (a[c] - b[c]) * (a[c] - b[c]);
      td2 += (ta[c] - tb[c]) * (ta[c] - tb[c]);
    }
    CHECK(td2 <= d2 + 1e-12);
  }
}

TEST_CASE("hypothesis audit on library generators") {
  const NoiseModel model = one_atom_model();
  const Dims dims{1, 1, 1};
  AuditConfig cfg;
  cfg.samples = 600;
  cfg.seed = 4;

  SUBCASE("linear constants are tight") {
    ProblemParams pp;
    pp.name = "linear";
    pp.alpha = -2.0;
    pp.beta = 0.3;
    pp.gamma = 0.2;
    const GBSDEProblem prob = make_problem(pp, model);
    CHECK(prob.gen.mu == -2.0);
    const AuditReport rep = audit_hypotheses(prob.gen, dims, model.marks, cfg);
    CHECK(rep.all_pass());
  }

  SUBCASE("monotone cubic passes with mu zero") {
    ProblemParams pp;
    pp.name = "monotone_cubic";
    const GBSDEProblem prob = make_problem(pp, model);
    CHECK(prob.gen.mu == 0.0);
    const AuditReport rep = audit_hypotheses(prob.gen, dims, model.marks, cfg);
    CHECK(rep.all_pass());
  }

  SUBCASE("understated constants fail with a witness") {
    GeneratorSpec growth;
    growth.f = [](double, std::span<const double> y, std::span<const double>,
                  std::span<const double>, std::span<double> o) { o[0] = y[0]; };
    growth.mu = -1.0;  // actual monotonicity constant is +1
    const AuditReport rep = audit_hypotheses(growth, dims, model.marks, cfg);
    CHECK_FALSE(rep.all_pass());
    bool witnessed = false;
    for (const auto& e : rep.entries)
      if (!e.pass && !e.witness.empty()) witnessed = true;
    CHECK(witnessed);
  }

  SUBCASE("understated z slope fails") {
    GeneratorSpec steep;
    steep.f = [](double, std::span<const double>, std::span<const double> z,
                 std::span<const double>, std::span<double> o) { o[0] = 2.0 * z[0]; };
    steep.lip_z = 1.0;
    const AuditReport rep = audit_hypotheses(steep, dims, model.marks, cfg);
    CHECK_FALSE(rep.all_pass());
  }
}

TEST_CASE("truncate_problem follows the clamped construction") {
  const NoiseModel model = one_atom_model();
  const Dims dims{1, 1, 1};

  ProblemParams pp;
  pp.name = "linear";
  pp.alpha = -0.5;
  pp.f0 = 7.0;
  pp.terminal.base = TerminalBase::zero;
  pp.terminal.offset = 5.0;  // xi = 5
  GBSDEProblem prob = make_problem(pp, model);

  SUBCASE("infinite level is the identity") {
    const GBSDEProblem same = truncate_problem(prob, std::numeric_limits<double>::infinity(), dims);
    std::vector<double> st{0.0, 0.0}, out(1), out2(1);
    prob.terminal(st, 1.0, out);
    same.terminal(st, 1.0, out2);
    CHECK(out[0] == out2[0]);
    std::vector<double> y{1.0}, z{0.0}, v{0.0};
    evaluate(prob.gen, 0.3, y, z, v, out);
    evaluate(same.gen, 0.3, y, z, v, out2);
    CHECK(out[0] == out2[0]);
  }

  SUBCASE("terminal clamps at the level") {
    const GBSDEProblem cut = truncate_problem(prob, 2.0, dims);
    std::vector<double> st{0.0, 0.0}, out(1);
    cut.terminal(st, 1.0, out);
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
  }

  SUBCASE("driver recentres its zero slice") {
    // f(t,0,0,0) = 7 clamps to 2: f_n(0) = 7 - 7 + 2 = 2
    const GBSDEProblem cut = truncate_problem(prob, 2.0, dims);
    std::vector<double> y{0.0}, z{0.0}, v{0.0}, out(1);
    evaluate(cut.gen, 0.0, y, z, v, out);
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-13));
    // the y/z/v dependence is untouched: slope alpha on y survives
    y[0] = 1.0;
    evaluate(cut.gen, 0.0, y, z, v, out);
    CHECK(out[0] == doctest::Approx(2.0 - 0.5).epsilon(1e-13));
  }
}

TEST_CASE("f0 norm helper") {
  const NoiseModel model = one_atom_model();
  const Dims dims{1, 1, 1};
  ProblemParams pp;
  pp.name = "linear";
  pp.f0 = -3.0;
  const GBSDEProblem prob = make_problem(pp, model);
  CHECK(f0_norm_at(prob.gen, dims, 0.4) == doctest::Approx(3.0).epsilon(1e-15));
}
