#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "gbsde/path_engine.hpp"
#include "gbsde/stats.hpp"

using namespace gbsde;

namespace {

NoiseModel one_atom_model(double lambda = 2.0) {
  NoiseModel model;
  model.brownian_dim = 1;
  model.marks = MarkSpace(1, {1.0}, {lambda});
  return model;
}

}  // namespace

TEST_CASE("determinism and policy independence") {
  const TimeGrid grid(1.0, 16);
  NoiseModel model = one_atom_model();
  model.extra_dim = 1;
  model.r.mode = RSpec::Mode::rate;
  model.r.const_rate = 0.5;

  const PathBundle a = simulate(grid, model, 42, 300, Exec::parallel);
  const PathBundle b = simulate(grid, model, 42, 300, Exec::parallel);
  const PathBundle c = simulate(grid, model, 42, 300, Exec::serial);
  CHECK(a == b);
  CHECK(a == c);

  const PathBundle other = simulate(grid, model, 43, 300, Exec::parallel);
  CHECK(a.dw != other.dw);
}

TEST_CASE("path extension keeps earlier paths") {
  const TimeGrid grid(1.0, 8);
  const NoiseModel model = one_atom_model();
  const PathBundle small = simulate(grid, model, 9, 50);
  const PathBundle big = simulate(grid, model, 9, 80);
  for (std::size_t p = 0; p < 50; ++p)
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(small.dw_at(p, i, 0) == big.dw_at(p, i, 0));
      CHECK(small.count_at(p, i, 0) == big.count_at(p, i, 0));
    }
}

TEST_CASE("horizon extension with equal step keeps draws as a prefix") {
  const NoiseModel model = one_atom_model();
  const PathBundle shortb = simulate(TimeGrid(1.0, 10), model, 11, 40);
  const PathBundle longb = simulate(TimeGrid(2.0, 20), model, 11, 40);
  for (std::size_t p = 0; p < 40; ++p)
    for (std::size_t i = 0; i < 10; ++i) {
      CHECK(shortb.dw_at(p, i, 0) == longb.dw_at(p, i, 0));
      CHECK(shortb.count_at(p, i, 0) == longb.count_at(p, i, 0));
    }
}

TEST_CASE("poisson moments at one step") {
  // lambda = 2, T = 1, N = 1: counts are Poisson(2)
  NoiseModel model = one_atom_model(2.0);
  model.brownian_dim = 0;
  const std::size_t n = 100000;
  const PathBundle bundle = simulate(TimeGrid(1.0, 1), model, 5, n);
  std::vector<double> counts(n);
  for (std::size_t p = 0; p < n; ++p) counts[p] = bundle.count_at(p, 0, 0);
  const double mean = pairwise_sum(counts) / static_cast<double>(n);
  CHECK(std::abs(mean - 2.0) <= 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("empty mark space means no counts") {
  NoiseModel model;
  model.brownian_dim = 2;
  const PathBundle bundle = simulate(TimeGrid(1.0, 4), model, 3, 10);
  CHECK(bundle.counts.empty());
  CHECK(bundle.m() == 0);
}

TEST_CASE("compensated increments") {
  const MarkSpace ms(1, {1.0}, {1.0});
  std::vector<std::uint32_t> zero{0};
  const auto a = compensated_increment(zero, ms, 0.1);
  CHECK(a[0] == doctest::Approx(-0.1).epsilon(1e-15));

  const MarkSpace half(1, {1.0}, {0.5});
  std::vector<std::uint32_t> three{3};
  const auto b = compensated_increment(three, half, 1.0);
  CHECK(b[0] == doctest::Approx(2.5).epsilon(1e-15));

  // mean of compensated increments vanishes within noise
  NoiseModel model = one_atom_model(2.0);
  const TimeGrid grid(1.0, 1);
  const std::size_t n = 100000;
  const PathBundle bundle = simulate(grid, model, 17, n);
  std::vector<double> comp(n);
  for (std::size_t p = 0; p < n; ++p) {
    std::vector<double> out(1);
    compensated_increment(bundle, p, 0, grid.dt(), out);
    comp[p] = out[0];
  }
  const MeanSe ms_est = mean_se(comp);
  CHECK(std::abs(ms_est.mean) <= 3.0 * ms_est.se);
}

TEST_CASE("gaussian increments scale with the step") {
  NoiseModel model;
  model.brownian_dim = 1;
  const std::size_t n = 20000;
  for (const std::size_t steps : {8u, 16u}) {
    const TimeGrid grid(1.0, steps);
    const PathBundle bundle = simulate(grid, model, 23, n);
    std::vector<double> sq(n);
    for (std::size_t p = 0; p < n; ++p) {
      const double x = bundle.dw_at(p, 0, 0);
      sq[p] = x * x;
    }
    const MeanSe est = mean_se(sq);
    CHECK(std::abs(est.mean - grid.dt()) <= 3.0 * est.se);
  }
}

TEST_CASE("channels are uncorrelated") {
  NoiseModel model = one_atom_model(1.5);
  model.extra_dim = 1;
  const TimeGrid grid(1.0, 2);
  const std::size_t n = 50000;
  const PathBundle bundle = simulate(grid, model, 31, n);
  const double h = grid.dt();

  std::vector<double> wc(n), wb(n), cb(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double dw = bundle.dw_at(p, 0, 0);
    const double dpi = static_cast<double>(bundle.count_at(p, 0, 0)) - 1.5 * h;
    const double dbv = bundle.db_at(p, 0, 0);
    wc[p] = dw * dpi;
    wb[p] = dw * dbv;
    cb[p] = dpi * dbv;
  }
  for (auto* col : {&wc, &wb, &cb}) {
    const MeanSe est = mean_se(*col);
    CHECK(std::abs(est.mean) <= 3.0 * est.se);
  }
}

TEST_CASE("running state accumulates the increments") {
  NoiseModel model = one_atom_model(1.0);
  model.extra_dim = 1;
  const TimeGrid grid(1.0, 6);
  const PathBundle bundle = simulate(grid, model, 3, 20);
  for (std::size_t p = 0; p < 20; ++p) {
    double w = 0.0, cnt = 0.0, b = 0.0;
    CHECK(bundle.state_at(p, 0)[0] == 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
      w += bundle.dw_at(p, i, 0);
      cnt += bundle.count_at(p, i, 0);
      b += bundle.db_at(p, i, 0);
      const auto st = bundle.state_at(p, i + 1);
      CHECK(st[0] == doctest::Approx(w).epsilon(1e-12));
      CHECK(st[1] == doctest::Approx(cnt).epsilon(1e-12));
      CHECK(st[2] == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("deterministic r jumps land left-open") {
  RSpec r;
  r.mode = RSpec::Mode::jumps;
  r.jump_times = {0.25, 0.5, 0.9};
  r.jump_sizes = {1.0, -2.0, 0.5};
  const TimeGrid grid(1.0, 4);
  const auto [dr, dr_abs] = jump_step_increments(r, grid);
  // t in (0, 0.25] -> step 0; (0.25, 0.5] -> step 1; 0.9 -> step 3
  CHECK(dr[0] == doctest::Approx(1.0));
  CHECK(dr[1] == doctest::Approx(-2.0));
  CHECK(dr[2] == 0.0);
  CHECK(dr[3] == doctest::Approx(0.5));
  CHECK(dr_abs[1] == doctest::Approx(2.0));
}

TEST_CASE("csv round trip is exact") {
  NoiseModel model = one_atom_model(1.0);
  model.extra_dim = 1;
  model.r.mode = RSpec::Mode::rate;
  model.r.const_rate = -0.25;
  const PathBundle bundle = simulate(TimeGrid(0.5, 5), model, 77, 25);

  std::ostringstream out;
  dump_bundle_csv(bundle, out);
  std::istringstream in(out.str());
  const PathBundle back = restore_bundle_csv(in, model);
  CHECK(back == bundle);
}
