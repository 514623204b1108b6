#include "gbsde/path_engine.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <utility>

#include "gbsde/csv.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/rng.hpp"

namespace gbsde {

std::pair<std::vector<double>, std::vector<double>> jump_step_increments(const RSpec& r,
                                                                         const TimeGrid& grid) {
  std::vector<double> dr(grid.steps(), 0.0), dr_abs(grid.steps(), 0.0);
  for (std::size_t q = 0; q < r.jump_times.size(); ++q) {
    const double t = r.jump_times[q];
    if (!(t > 0.0) || t > grid.horizon())
      throw SimulationError("R jump time outside (0, T]");
    auto idx = static_cast<std::size_t>(std::ceil(t / grid.dt())) - 1;
    if (idx >= grid.steps()) idx = grid.steps() - 1;
    dr[idx] += r.jump_sizes[q];
    dr_abs[idx] += std::abs(r.jump_sizes[q]);
  }
  return {std::move(dr), std::move(dr_abs)};
}

PathBundle simulate(const TimeGrid& grid, const NoiseModel& model, std::uint64_t seed,
                    std::size_t n_paths, Exec exec) {
  if (model.r.mode == RSpec::Mode::jumps &&
      model.r.jump_times.size() != model.r.jump_sizes.size())
    throw SimulationError("R jump times and sizes differ in length");

  PathBundle b;
  b.n_paths = n_paths;
  b.steps = grid.steps();
  b.model = model;

  const std::size_t N = grid.steps();
  const std::size_t d = model.brownian_dim;
  const std::size_t m = model.atom_count();
  const std::size_t e = model.extra_dim;
  const std::size_t sdim = model.state_dim();
  const double h = grid.dt();
  const double sqrt_h = std::sqrt(h);

  b.dw.assign(n_paths * N * d, 0.0);
  if (m) b.counts.assign(n_paths * N * m, 0);
  if (e) b.db.assign(n_paths * N * e, 0.0);
  if (!model.r.is_zero()) {
    b.dr.assign(n_paths * N, 0.0);
    b.dr_abs.assign(n_paths * N, 0.0);
  }
  b.state.assign(n_paths * (N + 1) * sdim, 0.0);

  std::vector<double> jump_dr, jump_dr_abs;
  if (model.r.mode == RSpec::Mode::jumps)
    std::tie(jump_dr, jump_dr_abs) = jump_step_increments(model.r, grid);

  const RngFactory factory(seed, kPurposeSimulate);

  for_each_path(exec, n_paths, [&](std::size_t p) {
    RngStream rng = factory.stream(p);
    double* st = b.state.data() + p * (N + 1) * sdim;  // node 0 starts at zero
    for (std::size_t i = 0; i < N; ++i) {
      const double t = grid.node(i);
      const double* cur = st + i * sdim;
      double* nxt = st + (i + 1) * sdim;

      if (!model.r.is_zero()) {
        double inc = 0.0, inc_abs = 0.0;
        if (model.r.mode == RSpec::Mode::rate) {
          const double rate = model.r.rate_at(t, {cur, sdim});
          inc = rate * h;
          inc_abs = std::abs(inc);
        } else {
          inc = jump_dr[i];
          inc_abs = jump_dr_abs[i];
        }
        b.dr[p * N + i] = inc;
        b.dr_abs[p * N + i] = inc_abs;
      }

      // Draw order per step is fixed: W, counts, extra channel. Changing it
      // would break the prefix property for horizon extensions.
      for (std::size_t c = 0; c < d; ++c) {
        const double inc = sqrt_h * rng.normal();
        b.dw[(p * N + i) * d + c] = inc;
        nxt[c] = cur[c] + inc;
      }
      for (std::size_t j = 0; j < m; ++j) {
        const std::uint32_t n = rng.poisson(model.marks.intensity(j) * h);
        b.counts[(p * N + i) * m + j] = n;
        nxt[d + j] = cur[d + j] + static_cast<double>(n);
      }
      for (std::size_t c = 0; c < e; ++c) {
        const double inc = sqrt_h * rng.normal();
        b.db[(p * N + i) * e + c] = inc;
        nxt[d + m + c] = cur[d + m + c] + inc;
      }
    }
  });

  return b;
}

void compensated_increment(const PathBundle& bundle, std::size_t path, std::size_t step,
                           double dt, std::span<double> out) {
  const std::size_t m = bundle.m();
  if (out.size() != m) throw std::invalid_argument("compensated increment needs one slot per atom");
  for (std::size_t j = 0; j < m; ++j)
    out[j] = static_cast<double>(bundle.count_at(path, step, j)) -
             bundle.model.marks.intensity(j) * dt;
}

std::vector<double> compensated_increment(std::span<const std::uint32_t> step_counts,
                                          const MarkSpace& ms, double dt) {
  if (step_counts.size() != ms.atom_count())
    throw std::invalid_argument("one count per atom required");
  std::vector<double> out(step_counts.size());
  for (std::size_t j = 0; j < step_counts.size(); ++j)
    out[j] = static_cast<double>(step_counts[j]) - ms.intensity(j) * dt;
  return out;
}

void dump_bundle_csv(const PathBundle& b, std::ostream& out) {
  out << "path,step";
  for (std::size_t c = 0; c < b.d(); ++c) out << ",dW" << c;
  for (std::size_t j = 0; j < b.m(); ++j) out << ",count" << j;
  for (std::size_t c = 0; c < b.extra(); ++c) out << ",dB" << c;
  if (!b.dr.empty()) out << ",dR,dR_abs";
  out << '\n';
  for (std::size_t p = 0; p < b.n_paths; ++p)
    for (std::size_t i = 0; i < b.steps; ++i) {
      out << p << ',' << i;
      for (std::size_t c = 0; c < b.d(); ++c) out << ',' << format_double(b.dw_at(p, i, c));
      for (std::size_t j = 0; j < b.m(); ++j) out << ',' << b.count_at(p, i, j);
      for (std::size_t c = 0; c < b.extra(); ++c) out << ',' << format_double(b.db_at(p, i, c));
      if (!b.dr.empty())
        out << ',' << format_double(b.dr_at(p, i)) << ',' << format_double(b.dr_abs_at(p, i));
      out << '\n';
    }
}

PathBundle restore_bundle_csv(std::istream& in, const NoiseModel& model) {
  std::string line;
  if (!std::getline(in, line)) throw SimulationError("bundle csv is empty");

  struct Row {
    std::size_t p, i;
    std::vector<double> vals;
  };
  std::vector<Row> rows;
  std::size_t max_p = 0, max_i = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    Row r;
    if (!std::getline(ss, cell, ',')) continue;
    r.p = std::stoul(cell);
    if (!std::getline(ss, cell, ',')) throw SimulationError("bundle csv row missing step");
    r.i = std::stoul(cell);
    while (std::getline(ss, cell, ',')) r.vals.push_back(std::stod(cell));
    max_p = std::max(max_p, r.p);
    max_i = std::max(max_i, r.i);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw SimulationError("bundle csv has no data rows");

  PathBundle b;
  b.n_paths = max_p + 1;
  b.steps = max_i + 1;
  b.model = model;
  const std::size_t d = model.brownian_dim, m = model.atom_count(), e = model.extra_dim;
  const std::size_t sdim = model.state_dim();
  const std::size_t expect = d + m + e + (model.r.is_zero() ? 0 : 2);

  b.dw.assign(b.n_paths * b.steps * d, 0.0);
  if (m) b.counts.assign(b.n_paths * b.steps * m, 0);
  if (e) b.db.assign(b.n_paths * b.steps * e, 0.0);
  if (!model.r.is_zero()) {
    b.dr.assign(b.n_paths * b.steps, 0.0);
    b.dr_abs.assign(b.n_paths * b.steps, 0.0);
  }
  b.state.assign(b.n_paths * (b.steps + 1) * sdim, 0.0);

  for (const Row& r : rows) {
    if (r.vals.size() != expect)
      throw SimulationError("bundle csv row width does not match the noise model");
    std::size_t c = 0;
    for (std::size_t k = 0; k < d; ++k) b.dw[(r.p * b.steps + r.i) * d + k] = r.vals[c++];
    for (std::size_t j = 0; j < m; ++j)
      b.counts[(r.p * b.steps + r.i) * m + j] = static_cast<std::uint32_t>(r.vals[c++]);
    for (std::size_t k = 0; k < e; ++k) b.db[(r.p * b.steps + r.i) * e + k] = r.vals[c++];
    if (!model.r.is_zero()) {
      b.dr[r.p * b.steps + r.i] = r.vals[c++];
      b.dr_abs[r.p * b.steps + r.i] = r.vals[c++];
    }
  }

  for (std::size_t p = 0; p < b.n_paths; ++p) {
    double* st = b.state.data() + p * (b.steps + 1) * sdim;
    for (std::size_t i = 0; i < b.steps; ++i) {
      const double* cur = st + i * sdim;
      double* nxt = st + (i + 1) * sdim;
      for (std::size_t k = 0; k < d; ++k) nxt[k] = cur[k] + b.dw[(p * b.steps + i) * d + k];
      for (std::size_t j = 0; j < m; ++j)
        nxt[d + j] = cur[d + j] + static_cast<double>(b.counts[(p * b.steps + i) * m + j]);
      for (std::size_t k = 0; k < e; ++k)
        nxt[d + m + k] = cur[d + m + k] + b.db[(p * b.steps + i) * e + k];
    }
  }
  return b;
}

}  // namespace gbsde
