#include "gbsde/generator.hpp"

#include <cmath>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/rng.hpp"

namespace gbsde {

void evaluate(const GeneratorSpec& gen, double t, std::span<const double> y,
              std::span<const double> z, std::span<const double> v, std::span<double> out) {
  gen.f(t, y, z, v, out);
  for (double x : out)
    if (!std::isfinite(x))
      throw GeneratorError("driver returned a non-finite value at t = " + std::to_string(t));
}

double f0_norm_at(const GeneratorSpec& gen, const Dims& dims, double t) {
  if (gen.f0_norm) return gen.f0_norm(t);
  std::vector<double> y(dims.k, 0.0), z(dims.k * dims.d, 0.0), v(dims.m * dims.k, 0.0),
      out(dims.k, 0.0);
  evaluate(gen, t, y, z, v, out);
  double s = 0.0;
  for (double x : out) s += x * x;
  return std::sqrt(s);
}

double truncate(double x, double level) {
  const double a = std::abs(x);
  return a > level ? x * (level / a) : x;
}

void truncate(std::span<const double> x, double level, std::span<double> out) {
  double norm2 = 0.0;
  for (double t : x) norm2 += t * t;
  const double norm = std::sqrt(norm2);
  const double scale = norm > level ? level / norm : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale;
}

GBSDEProblem truncate_problem(const GBSDEProblem& prob, double level, const Dims& dims) {
  if (std::isinf(level)) return prob;
  if (!(level > 0.0)) throw std::invalid_argument("truncation level must be positive");

  GBSDEProblem out = prob;

  TerminalFn base_terminal = prob.terminal;
  out.terminal = [base_terminal, level](std::span<const double> state, double t,
                                        std::span<double> xi) {
    base_terminal(state, t, xi);
    truncate({xi.data(), xi.size()}, level, xi);
  };

  // f_n = f - f(.,0,0,0) + clamp(f(.,0,0,0)); the structural constants are
  // unchanged because the shift is y-, z- and v-free.
  GeneratorFn base_f = prob.gen.f;
  const Dims local = dims;
  out.gen.f = [base_f, level, local](double t, std::span<const double> y,
                                     std::span<const double> z, std::span<const double> v,
                                     std::span<double> res) {
    base_f(t, y, z, v, res);
    std::vector<double> zero_y(local.k, 0.0), zero_z(local.k * local.d, 0.0),
        zero_v(local.m * local.k, 0.0), f0(local.k, 0.0), f0_cut(local.k, 0.0);
    base_f(t, zero_y, zero_z, zero_v, f0);
    truncate(f0, level, f0_cut);
    for (std::size_t c = 0; c < res.size(); ++c) res[c] += f0_cut[c] - f0[c];
  };
  std::function<double(double)> base_f0 = prob.gen.f0_norm;
  out.gen.f0_norm = [base_f0, base_f, level, local](double t) {
    if (base_f0) return std::min(base_f0(t), level);
    std::vector<double> zero_y(local.k, 0.0), zero_z(local.k * local.d, 0.0),
        zero_v(local.m * local.k, 0.0), f0(local.k, 0.0);
    base_f(t, zero_y, zero_z, zero_v, f0);
    double s = 0.0;
    for (double x : f0) s += x * x;
    return std::min(std::sqrt(s), level);
  };

  out.r_variation_cap = std::min(prob.r_variation_cap, level);
  return out;
}

namespace {

void fill_uniform(RngStream& rng, double range, std::span<double> out) {
  for (double& x : out) x = range * (2.0 * rng.uniform() - 1.0);
}

std::string witness_tuple(double t, std::span<const double> a, std::span<const double> b) {
  std::ostringstream os;
  os << "t=" << t << " lhs=(";
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
  os << ") rhs=(";
  for (std::size_t i = 0; i < b.size(); ++i) os << (i ? "," : "") << b[i];
  os << ")";
  return os.str();
}

}  // namespace

AuditReport audit_hypotheses(const GeneratorSpec& gen, const Dims& dims, const MarkSpace& ms,
                             const AuditConfig& cfg) {
  AuditReport report;
  AuditEntry mono{"monotonicity", gen.mu, -std::numeric_limits<double>::infinity(), true, ""};
  AuditEntry lz{"lipschitz_z", gen.lip_z, 0.0, true, ""};
  AuditEntry lv{"lipschitz_v", gen.lip_v, 0.0, true, ""};

  RngStream rng = RngFactory(cfg.seed, kPurposeAudit).stream(0);
  std::vector<double> y(dims.k), y2(dims.k), z(dims.k * dims.d), z2(dims.k * dims.d),
      v(dims.m * dims.k), v2(dims.m * dims.k), fa(dims.k), fb(dims.k);

  for (std::size_t s = 0; s < cfg.samples; ++s) {
    const double t = cfg.t_max * rng.uniform();
    fill_uniform(rng, cfg.y_range, y);
    fill_uniform(rng, cfg.y_range, y2);
    fill_uniform(rng, cfg.z_range, z);
    fill_uniform(rng, cfg.z_range, z2);
    fill_uniform(rng, cfg.v_range, v);
    fill_uniform(rng, cfg.v_range, v2);

    // (f(y) - f(y')) . (y - y') / |y - y'|^2 against mu
    evaluate(gen, t, y, z, v, fa);
    evaluate(gen, t, y2, z, v, fb);
    double dot = 0.0, dist2 = 0.0;
    for (std::size_t c = 0; c < dims.k; ++c) {
      dot += (fa[c] - fb[c]) * (y[c] - y2[c]);
      dist2 += (y[c] - y2[c]) * (y[c] - y2[c]);
    }
    if (dist2 > 1e-14) {
      const double ratio = dot / dist2;
      if (ratio > mono.worst) {
        mono.worst = ratio;
        if (ratio > gen.mu + cfg.tol) {
          mono.pass = false;
          mono.witness = witness_tuple(t, y, y2);
        }
      }
    }

    // |f(z) - f(z')| / |z - z'| against lip_z
    evaluate(gen, t, y, z2, v, fb);
    double df2 = 0.0, dz2 = 0.0;
    for (std::size_t c = 0; c < dims.k; ++c) df2 += (fa[c] - fb[c]) * (fa[c] - fb[c]);
    for (std::size_t c = 0; c < z.size(); ++c) dz2 += (z[c] - z2[c]) * (z[c] - z2[c]);
    if (dz2 > 1e-14) {
      const double ratio = std::sqrt(df2 / dz2);
      if (ratio > lz.worst) {
        lz.worst = ratio;
        if (ratio > gen.lip_z + cfg.tol) {
          lz.pass = false;
          lz.witness = witness_tuple(t, z, z2);
        }
      }
    }

    // |f(v) - f(v')| / ||v - v'||_lambda against lip_v
    if (dims.m > 0) {
      evaluate(gen, t, y, z, v2, fb);
      df2 = 0.0;
      for (std::size_t c = 0; c < dims.k; ++c) df2 += (fa[c] - fb[c]) * (fa[c] - fb[c]);
      std::vector<double> dv(v.size());
      for (std::size_t c = 0; c < v.size(); ++c) dv[c] = v[c] - v2[c];
      const double dvn = l2_lambda_norm(dv, dims.k, ms);
      if (dvn > 1e-9) {
        const double ratio = std::sqrt(df2) / dvn;
        if (ratio > lv.worst) {
          lv.worst = ratio;
          if (ratio > gen.lip_v + cfg.tol) {
            lv.pass = false;
            lv.witness = witness_tuple(t, v, v2);
          }
        }
      }
    }
  }

  report.entries = {mono, lz, lv};
  return report;
}

}  // namespace gbsde
