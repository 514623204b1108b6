#include "gbsde/problem_library.hpp"

#include <cmath>
#include <stdexcept>

namespace gbsde {

namespace {

double eval_base(TerminalBase base, std::span<const double> state, double t,
                 const NoiseModel& model) {
  switch (base) {
    case TerminalBase::zero:
      return 0.0;
    case TerminalBase::w:
      return state[0];
    case TerminalBase::n:
      if (model.atom_count() == 0)
        throw std::invalid_argument("terminal 'n' needs at least one atom");
      return state[model.brownian_dim];
    case TerminalBase::b:
      if (model.extra_dim == 0)
        throw std::invalid_argument("terminal 'b' needs the extra noise channel");
      return state[model.brownian_dim + model.atom_count()];
    case TerminalBase::abs_w:
      return std::abs(state[0]);
    case TerminalBase::exp_neg_t:
      return std::exp(-t);
  }
  return 0.0;
}

}  // namespace

TerminalFn make_terminal(const TerminalSpec& spec, const NoiseModel& model) {
  return [spec, model](std::span<const double> state, double t, std::span<double> out) {
    const double value = spec.scale * eval_base(spec.base, state, t, model) +
                         spec.scale2 * eval_base(spec.base2, state, t, model) + spec.offset;
    out[0] = value;
    for (std::size_t c = 1; c < out.size(); ++c) out[c] = 0.0;
  };
}

bool is_known_problem(const std::string& name) {
  return name == "zero" || name == "constant_driver" || name == "linear" ||
         name == "monotone_cubic" || name == "jump_kernel";
}

GBSDEProblem make_problem(const ProblemParams& params, const NoiseModel& model) {
  GBSDEProblem prob;
  prob.k = 1;
  prob.p = params.p;
  prob.terminal = make_terminal(params.terminal, model);
  prob.r_spec = model.r;

  const std::size_t d = model.brownian_dim;
  const std::size_t m = model.atom_count();
  const std::vector<double> lambdas = model.marks.intensities();

  if (params.name == "zero") {
    prob.gen.f = [](double, std::span<const double>, std::span<const double>,
                    std::span<const double>, std::span<double> out) {
      for (double& x : out) x = 0.0;
    };
    prob.gen.f0_norm = [](double) { return 0.0; };
  } else if (params.name == "constant_driver") {
    const double c = params.driver_value;
    prob.gen.f = [c](double, std::span<const double>, std::span<const double>,
                     std::span<const double>, std::span<double> out) {
      for (double& x : out) x = c;
    };
    prob.gen.f0_norm = [c](double) { return std::abs(c); };
  } else if (params.name == "linear") {
    const double alpha = params.alpha;
    const double beta = params.beta;
    const double gamma = params.gamma;
    const double f0 = params.f0;
    for (double lam : lambdas) {
      (void)lam;
      if (gamma < -1.0)
        throw std::invalid_argument("linear jump loading must satisfy gamma >= -1");
    }
    prob.gen.f = [alpha, beta, gamma, f0, lambdas, d](double, std::span<const double> y,
                                                      std::span<const double> z,
                                                      std::span<const double> v,
                                                      std::span<double> out) {
      const std::size_t k = out.size();
      for (std::size_t c = 0; c < k; ++c) {
        double acc = f0 + alpha * y[c];
        for (std::size_t e = 0; e < d; ++e) acc += beta * z[c * d + e];
        for (std::size_t j = 0; j < lambdas.size(); ++j)
          acc += lambdas[j] * gamma * v[j * k + c];
        out[c] = acc;
      }
    };
    prob.gen.mu = alpha;
    prob.gen.lip_z = std::abs(beta) * std::sqrt(static_cast<double>(d));
    double lv2 = 0.0;
    for (double lam : lambdas) lv2 += lam * gamma * gamma;
    prob.gen.lip_v = std::sqrt(lv2);
    prob.gen.f0_norm = [f0](double) { return std::abs(f0); };
    if (m > 0) {
      prob.gen.kappa = [gamma, m](double, double, std::span<const double>,
                                  std::span<const double>, std::span<const double>,
                                  std::span<double> kappa) {
        for (std::size_t j = 0; j < m; ++j) kappa[j] = gamma;
      };
      prob.gen.theta_bound.assign(m, std::abs(gamma));
    }
  } else if (params.name == "monotone_cubic") {
    prob.gen.f = [](double, std::span<const double> y, std::span<const double>,
                    std::span<const double>, std::span<double> out) {
      double n2 = 0.0;
      for (double x : y) n2 += x * x;
      for (std::size_t c = 0; c < out.size(); ++c) out[c] = -n2 * y[c];
    };
    prob.gen.mu = 0.0;
    prob.gen.f0_norm = [](double) { return 0.0; };
  } else if (params.name == "jump_kernel") {
    const double scale = params.kernel_scale;
    if (std::abs(scale) > 1.0)
      throw std::invalid_argument("jump_kernel scale must lie in [-1, 1] to keep kappa >= -1");
    prob.gen.f = [scale, lambdas](double, std::span<const double>, std::span<const double>,
                                  std::span<const double> v, std::span<double> out) {
      const std::size_t k = out.size();
      for (std::size_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j < lambdas.size(); ++j)
          acc += lambdas[j] * std::sin(v[j * k + c]);
        out[c] = scale * acc;
      }
    };
    prob.gen.mu = 0.0;
    prob.gen.lip_z = 0.0;
    double mass = 0.0;
    for (double lam : lambdas) mass += lam;
    prob.gen.lip_v = std::abs(scale) * std::sqrt(mass);
    prob.gen.f0_norm = [](double) { return 0.0; };
    if (m > 0) {
      // mean-value slope of sin between the two jump arguments
      prob.gen.kappa = [scale, m](double, double, std::span<const double>,
                                  std::span<const double> v, std::span<const double> v2,
                                  std::span<double> kappa) {
        for (std::size_t j = 0; j < m; ++j) {
          const double a = v[j], b = v2[j];
          kappa[j] = std::abs(a - b) < 1e-12 ? scale * std::cos(a)
                                             : scale * (std::sin(a) - std::sin(b)) / (a - b);
        }
      };
      prob.gen.theta_bound.assign(m, std::abs(scale));
    }
  } else {
    throw std::invalid_argument("unknown problem name '" + params.name + "'");
  }

  return prob;
}

}  // namespace gbsde
