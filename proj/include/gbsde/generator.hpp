#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gbsde/mark_space.hpp"
#include "gbsde/path_engine.hpp"

namespace gbsde {

/// Driver f(t, y, z, v) -> R^k. Arguments are flat row-major buffers:
/// y has k entries, z has k*d entries (component-major), v has m*k entries
/// (atom-major blocks).
using GeneratorFn = std::function<void(double t, std::span<const double> y,
                                       std::span<const double> z, std::span<const double> v,
                                       std::span<double> out)>;

/// Terminal condition evaluated at a state snapshot. For a fixed horizon the
/// snapshot is (state_N, T); for a random horizon it is the stopped state and
/// the stopping time.
using TerminalFn =
    std::function<void(std::span<const double> state, double t, std::span<double> out)>;

/// Slope kernel for jump couplings: writes one scalar per atom such that
/// f(t,y,z,v) - f(t,y,z,v') <= integral (v - v') kappa dlambda. Scalar
/// solutions only.
using KernelFn = std::function<void(double t, double y, std::span<const double> z,
                                    std::span<const double> v, std::span<const double> v2,
                                    std::span<double> kappa_out)>;

/// Driver plus its declared structural constants.
struct GeneratorSpec {
  GeneratorFn f;
  double mu = 0.0;     // one-sided monotonicity bound in y
  double lip_z = 0.0;  // Lipschitz constant in z
  double lip_v = 0.0;  // Lipschitz constant in v under the lambda norm

  /// t -> |f(t,0,0,0)|. When absent it is computed from f directly.
  std::function<double(double)> f0_norm;

  /// Optional slope kernel with its per-atom bound; installed by problems
  /// that support kernel-based ordering.
  KernelFn kappa;
  std::vector<double> theta_bound;
};

struct Dims {
  std::size_t k = 1;
  std::size_t d = 1;
  std::size_t m = 0;
};

/// Full problem datum (terminal condition, driver, forcing process).
/// r_spec describes R; the realized increments always come from the bundle
/// that is being solved on. r_variation_cap freezes R contributions once the
/// running variation |R| exceeds the cap (infinity keeps all of them).
struct GBSDEProblem {
  std::size_t k = 1;
  TerminalFn terminal;
  GeneratorSpec gen;
  RSpec r_spec;
  double p = 2.0;
  double r_variation_cap = std::numeric_limits<double>::infinity();
};

/// Evaluates the driver and rejects non-finite output.
void evaluate(const GeneratorSpec& gen, double t, std::span<const double> y,
              std::span<const double> z, std::span<const double> v, std::span<double> out);

/// |f(t,0,0,0)| for a problem of the given dims.
double f0_norm_at(const GeneratorSpec& gen, const Dims& dims, double t);

/// Radial clamp x * (n / max(|x|, n)); identity inside the ball of radius n,
/// 1-Lipschitz everywhere.
void truncate(std::span<const double> x, double level, std::span<double> out);
double truncate(double x, double level);

/// Truncated datum: terminal clamped at level, driver recentred so its t=0
/// slice is clamped, R frozen once |R| crosses the level. level = infinity
/// returns the input unchanged.
GBSDEProblem truncate_problem(const GBSDEProblem& prob, double level, const Dims& dims);

struct AuditConfig {
  std::size_t samples = 400;
  std::uint64_t seed = 0;
  double t_max = 1.0;
  double y_range = 2.0;
  double z_range = 2.0;
  double v_range = 2.0;
  double tol = 1e-9;
};

struct AuditEntry {
  std::string name;
  double declared = 0.0;
  double worst = 0.0;
  bool pass = true;
  std::string witness;
};

struct AuditReport {
  std::vector<AuditEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

/// Samples (t, y, y', z, z', v, v') tuples and checks the declared
/// monotonicity and Lipschitz constants, reporting worst observed ratios and
/// a witness tuple on failure.
AuditReport audit_hypotheses(const GeneratorSpec& gen, const Dims& dims, const MarkSpace& ms,
                             const AuditConfig& cfg);

}  // namespace gbsde
