#pragma once

// Empirical versions of the weighted norms behind the a-priori and stability
// estimates. Everything is a discrete sum over grid nodes and a mean over
// paths; sup over time is taken over grid nodes. The constants in the
// continuous estimates are non-constructive, so the checkable content is
// that lhs/rhs ratios stay finite and stable, not any specific bound.

#include <cstdint>
#include <span>

#include "gbsde/generator.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/path_engine.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

/// min(p/2, p(p-1) 3^{1-p}) for p >= 2, the Ito-inequality constant used by
/// the p-th power estimates. On p >= 2 the second branch is active
/// everywhere; the min never switches.
double alpha_p(double p);

/// One norm functional: mean and standard error of the per-path p-powered
/// quantity, plus its p-th root.
struct Functional {
  double mean = 0.0;
  double se = 0.0;
  double norm = 0.0;
};

struct NormReport {
  double p = 2.0;
  double a = 0.0;
  Functional sp;         // E sup_i e^{a p t_i} |Y_i|^p
  Functional mp;         // E (sum e^{2 a t_i} |Z_i|^2 h)^{p/2}
  Functional lp;         // E (sum e^{2 a t_i} |V_i|_lambda^2 h)^{p/2}
  Functional m_bracket;  // E e^{a p t_stop} (sum |dM_i|^2)^{p/2}
  Functional data_xi;    // E e^{a p t_stop} |xi|^p
  Functional data_f;     // E (sum e^{a t_i} f_i h)^p
  Functional data_r;     // E (sum e^{a t_i} |dR_i|)^p
  /// a was below mu + 2 L^2; the estimates are only asserted above it.
  bool below_recommended_weight = false;
  bool all_finite = true;
};

/// Norms of a solution together with its data functionals. A nonempty tau
/// clamps the time weight at the stopped node and cuts every integral there,
/// which is the random-horizon weighting with a as the discount rate.
NormReport compute_norms(const DiscreteSolution& sol, const GBSDEProblem& prob,
                         const PathBundle& bundle, double p, double a,
                         std::span<const std::uint32_t> tau = {}, Exec exec = Exec::parallel);

struct RatioReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  /// rhs vanished while lhs stayed above noise level; possible only through
  /// estimator artifacts and always worth a look.
  bool flagged = false;
  Functional y_part, z_part, v_part, m_part;
  Functional xi_part, f_part, r_part;
};

/// lhs = the four solution functionals of sol, rhs = the three data
/// functionals; ratio = lhs / rhs. The empirical shadow of the a-priori
/// estimate: finiteness and cross-seed stability are the assertions.
RatioReport apriori_ratio(const DiscreteSolution& sol, const GBSDEProblem& prob,
                          const PathBundle& bundle, double p, double a,
                          std::span<const std::uint32_t> tau = {}, Exec exec = Exec::parallel);

/// Stability functionals of the difference of two solutions on one bundle.
/// lhs measures (dY, dZ, dV, dM); rhs measures the data differences, with
/// the driver difference evaluated along solution b (terminal difference
/// from the stored terminal nodes, driver difference f_a - f_b at
/// (Y_b, Z_b, V_b), R difference from the effective increments).
RatioReport variation_ratio(const DiscreteSolution& sol_a, const DiscreteSolution& sol_b,
                            const GBSDEProblem& prob_a, const GBSDEProblem& prob_b,
                            const PathBundle& bundle, double p, double a,
                            std::span<const std::uint32_t> tau = {}, Exec exec = Exec::parallel);

}  // namespace gbsde
