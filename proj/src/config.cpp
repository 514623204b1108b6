#include "gbsde/config.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "gbsde/csv.hpp"
#include "gbsde/errors.hpp"

namespace gbsde {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_u64(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// enum name tables

std::string r_mode_name(RSpec::Mode m) {
  switch (m) {
    case RSpec::Mode::zero: return "zero";
    case RSpec::Mode::rate: return "rate";
    case RSpec::Mode::jumps: return "jumps";
  }
  return "zero";
}
std::optional<RSpec::Mode> r_mode_value(std::string_view s) {
  if (s == "zero") return RSpec::Mode::zero;
  if (s == "rate") return RSpec::Mode::rate;
  if (s == "jumps") return RSpec::Mode::jumps;
  return std::nullopt;
}

std::string scheme_name(SolverConfig::Scheme s) {
  return s == SolverConfig::Scheme::regression ? "regression" : "nested_mc";
}
std::optional<SolverConfig::Scheme> scheme_value(std::string_view s) {
  if (s == "regression") return SolverConfig::Scheme::regression;
  if (s == "nested_mc") return SolverConfig::Scheme::nested_mc;
  return std::nullopt;
}

std::string exec_name(Exec e) { return e == Exec::serial ? "serial" : "parallel"; }
std::optional<Exec> exec_value(std::string_view s) {
  if (s == "serial") return Exec::serial;
  if (s == "parallel") return Exec::parallel;
  return std::nullopt;
}

std::string terminal_name(TerminalBase b) {
  switch (b) {
    case TerminalBase::zero: return "zero";
    case TerminalBase::w: return "w";
    case TerminalBase::n: return "n";
    case TerminalBase::b: return "b";
    case TerminalBase::abs_w: return "abs_w";
    case TerminalBase::exp_neg_t: return "exp_neg_t";
  }
  return "zero";
}
std::optional<TerminalBase> terminal_value(std::string_view s) {
  if (s == "zero") return TerminalBase::zero;
  if (s == "w") return TerminalBase::w;
  if (s == "n") return TerminalBase::n;
  if (s == "b") return TerminalBase::b;
  if (s == "abs_w") return TerminalBase::abs_w;
  if (s == "exp_neg_t") return TerminalBase::exp_neg_t;
  return std::nullopt;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> s{"grid",   "noise",    "problem",  "problem2",
                                       "solver", "oracle",   "compare",  "stopping",
                                       "convergence", "run"};
  return s;
}

struct Parser {
  ExperimentConfig cfg;
  std::vector<Diagnostic> diags;
  std::set<std::string> seen;
  std::string section;
  bool have_horizon = false, have_steps = false, have_seed = false, have_paths = false;

  void fail(std::size_t ln, std::string msg) { diags.push_back({ln, std::move(msg)}); }

  bool once(std::size_t ln, const std::string& key) {
    const std::string tag = section + "." + key;
    if (!seen.insert(tag).second) {
      fail(ln, "duplicate key " + tag);
      return false;
    }
    return true;
  }

  bool need_double(std::size_t ln, const std::string& key, std::string_view value,
                   double& slot) {
    if (!once(ln, key)) return false;
    if (auto v = to_double(value)) {
      slot = *v;
      return true;
    }
    fail(ln, "malformed number for " + section + "." + key);
    return false;
  }

  void need_int(std::size_t ln, const std::string& key, std::string_view value, int& slot,
                int floor) {
    if (!once(ln, key)) return;
    const auto v = to_int(value);
    if (!v) {
      fail(ln, "malformed integer for " + section + "." + key);
      return;
    }
    if (*v < floor) {
      fail(ln, section + "." + key + " must be at least " + std::to_string(floor));
      return;
    }
    slot = *v;
  }

  void need_size(std::size_t ln, const std::string& key, std::string_view value,
                 std::size_t& slot, std::size_t floor) {
    if (!once(ln, key)) return;
    const auto v = to_u64(value);
    if (!v) {
      fail(ln, "malformed nonnegative integer for " + section + "." + key);
      return;
    }
    if (*v < floor) {
      fail(ln, section + "." + key + " must be at least " + std::to_string(floor));
      return;
    }
    slot = static_cast<std::size_t>(*v);
  }

  void need_list(std::size_t ln, const std::string& key, std::string_view value,
                 std::vector<double>& slot) {
    if (!once(ln, key)) return;
    std::vector<double> out;
    for (const auto piece : split_ws(value)) {
      const auto v = to_double(piece);
      if (!v) {
        fail(ln, "malformed number in list " + section + "." + key);
        return;
      }
      out.push_back(*v);
    }
    slot = std::move(out);
  }

  void problem_key(std::size_t ln, ProblemParams& p, const std::string& key,
                   std::string_view value) {
    if (key == "name") {
      if (!once(ln, key)) return;
      const std::string name(trim(value));
      if (!is_known_problem(name)) {
        fail(ln, "unknown problem name " + name);
        return;
      }
      p.name = name;
    } else if (key == "p") {
      if (need_double(ln, key, value, p.p) && !(p.p >= 1.0))
        fail(ln, section + ".p must be >= 1");
    } else if (key == "alpha") {
      need_double(ln, key, value, p.alpha);
    } else if (key == "beta") {
      need_double(ln, key, value, p.beta);
    } else if (key == "gamma") {
      need_double(ln, key, value, p.gamma);
    } else if (key == "f0") {
      need_double(ln, key, value, p.f0);
    } else if (key == "driver_value") {
      need_double(ln, key, value, p.driver_value);
    } else if (key == "kernel_scale") {
      need_double(ln, key, value, p.kernel_scale);
    } else if (key == "terminal" || key == "terminal2") {
      if (!once(ln, key)) return;
      const auto b = terminal_value(trim(value));
      if (!b) {
        fail(ln, "unknown terminal base for " + section + "." + key);
        return;
      }
      (key == "terminal" ? p.terminal.base : p.terminal.base2) = *b;
    } else if (key == "terminal_scale") {
      need_double(ln, key, value, p.terminal.scale);
    } else if (key == "terminal2_scale") {
      need_double(ln, key, value, p.terminal.scale2);
    } else if (key == "terminal_offset") {
      need_double(ln, key, value, p.terminal.offset);
    } else {
      fail(ln, "unknown key " + section + "." + key);
    }
  }

  void handle(std::size_t ln, const std::string& key, std::string_view value) {
    if (section == "grid") {
      if (key == "horizon") {
        if (need_double(ln, key, value, cfg.horizon)) {
          if (cfg.horizon > 0.0)
            have_horizon = true;
          else
            fail(ln, "grid.horizon must be positive");
        }
      } else if (key == "steps") {
        need_size(ln, key, value, cfg.steps, 1);
        have_steps = true;
      } else {
        fail(ln, "unknown key grid." + key);
      }
    } else if (section == "noise") {
      if (key == "brownian_dim") {
        need_size(ln, key, value, cfg.noise.brownian_dim, 1);
      } else if (key == "extra_dim") {
        need_size(ln, key, value, cfg.noise.extra_dim, 0);
      } else if (key == "atom") {
        const std::size_t at = value.find('@');
        if (at == std::string_view::npos) {
          fail(ln, "atom line needs the form: components @ intensity");
          return;
        }
        AtomLine atom;
        for (const auto piece : split_ws(value.substr(0, at))) {
          const auto v = to_double(piece);
          if (!v) {
            fail(ln, "malformed mark component in atom line");
            return;
          }
          atom.mark.push_back(*v);
        }
        if (atom.mark.empty()) {
          fail(ln, "atom line needs at least one mark component");
          return;
        }
        const auto lam = to_double(value.substr(at + 1));
        if (!lam) {
          fail(ln, "malformed intensity in atom line");
          return;
        }
        if (!(*lam > 0.0) || !std::isfinite(*lam)) {
          fail(ln, "intensity must be positive");
          return;
        }
        atom.intensity = *lam;
        cfg.noise.atoms.push_back(std::move(atom));
      } else if (key == "r_mode") {
        if (!once(ln, key)) return;
        const auto m = r_mode_value(trim(value));
        if (!m) {
          fail(ln, "r_mode must be zero, rate, or jumps");
          return;
        }
        cfg.noise.r_mode = *m;
      } else if (key == "r_rate") {
        need_double(ln, key, value, cfg.noise.r_rate);
      } else if (key == "r_jump") {
        const std::size_t at = value.find('@');
        if (at == std::string_view::npos) {
          fail(ln, "r_jump line needs the form: time @ size");
          return;
        }
        const auto t = to_double(value.substr(0, at));
        const auto s = to_double(value.substr(at + 1));
        if (!t || !s) {
          fail(ln, "malformed r_jump line");
          return;
        }
        if (!(*t > 0.0)) {
          fail(ln, "r_jump time must be positive");
          return;
        }
        cfg.noise.r_jumps.emplace_back(*t, *s);
      } else {
        fail(ln, "unknown key noise." + key);
      }
    } else if (section == "problem") {
      problem_key(ln, cfg.problem, key, value);
    } else if (section == "problem2") {
      if (!cfg.problem2) cfg.problem2.emplace();
      problem_key(ln, *cfg.problem2, key, value);
    } else if (section == "solver") {
      if (key == "scheme") {
        if (!once(ln, key)) return;
        const auto s = scheme_value(trim(value));
        if (!s) {
          fail(ln, "scheme must be regression or nested_mc");
          return;
        }
        cfg.solver.scheme = *s;
      } else if (key == "degree") {
        need_int(ln, key, value, cfg.solver.degree, 0);
      } else if (key == "inner") {
        need_int(ln, key, value, cfg.solver.inner, 1);
      } else if (key == "picard_tol") {
        need_double(ln, key, value, cfg.solver.picard_tol);
      } else if (key == "picard_max_iter") {
        need_int(ln, key, value, cfg.solver.picard_max_iter, 1);
      } else if (key == "damping") {
        need_double(ln, key, value, cfg.solver.damping);
      } else if (key == "trunc") {
        if (!once(ln, key)) return;
        const std::string_view v = trim(value);
        if (v == "auto") {
          cfg.solver.p_trunc.reset();
        } else if (v == "none") {
          cfg.solver.p_trunc = std::numeric_limits<double>::infinity();
        } else if (const auto num = to_double(v)) {
          if (!(*num > 0.0)) {
            fail(ln, "solver.trunc must be positive, auto, or none");
            return;
          }
          cfg.solver.p_trunc = *num;
        } else {
          fail(ln, "solver.trunc must be a number, auto, or none");
        }
      } else if (key == "inner_seed") {
        if (!once(ln, key)) return;
        const auto v = to_u64(value);
        if (!v) {
          fail(ln, "malformed integer for solver.inner_seed");
          return;
        }
        cfg.solver.inner_seed = *v;
      } else {
        fail(ln, "unknown key solver." + key);
      }
    } else if (section == "oracle") {
      if (key == "alpha") {
        need_double(ln, key, value, cfg.oracle.alpha);
      } else if (key == "beta") {
        need_list(ln, key, value, cfg.oracle.beta);
      } else if (key == "gamma") {
        need_list(ln, key, value, cfg.oracle.gamma);
        for (double g : cfg.oracle.gamma)
          if (g < -1.0) {
            fail(ln, "oracle.gamma entries must be >= -1");
            return;
          }
      } else if (key == "forcing") {
        need_double(ln, key, value, cfg.oracle.forcing);
      } else {
        fail(ln, "unknown key oracle." + key);
      }
    } else if (section == "compare") {
      if (key == "r_scale_low") {
        need_double(ln, key, value, cfg.compare.r_scale_low);
      } else if (key == "r_scale_high") {
        need_double(ln, key, value, cfg.compare.r_scale_high);
      } else {
        fail(ln, "unknown key compare." + key);
      }
    } else if (section == "stopping") {
      if (key == "rho") {
        need_double(ln, key, value, cfg.stopping.rho);
      } else if (key == "coord") {
        need_size(ln, key, value, cfg.stopping.coord, 0);
      } else if (key == "lo") {
        need_double(ln, key, value, cfg.stopping.lo);
      } else if (key == "hi") {
        need_double(ln, key, value, cfg.stopping.hi);
      } else if (key == "caps") {
        need_list(ln, key, value, cfg.stopping.caps);
      } else {
        fail(ln, "unknown key stopping." + key);
      }
    } else if (section == "convergence") {
      if (key == "steps") {
        if (!once(ln, key)) return;
        std::vector<std::size_t> out;
        for (const auto piece : split_ws(value)) {
          const auto v = to_u64(piece);
          if (!v || *v < 1) {
            fail(ln, "convergence.steps entries must be positive integers");
            return;
          }
          out.push_back(static_cast<std::size_t>(*v));
        }
        cfg.convergence_steps = std::move(out);
      } else {
        fail(ln, "unknown key convergence." + key);
      }
    } else if (section == "run") {
      if (key == "seed") {
        if (!once(ln, key)) return;
        const auto v = to_u64(value);
        if (!v) {
          fail(ln, "malformed integer for run.seed");
          return;
        }
        cfg.run.seed = *v;
        have_seed = true;
      } else if (key == "paths") {
        need_size(ln, key, value, cfg.run.paths, 1);
        have_paths = true;
      } else if (key == "exec") {
        if (!once(ln, key)) return;
        const auto e = exec_value(trim(value));
        if (!e) {
          fail(ln, "exec must be serial or parallel");
          return;
        }
        cfg.run.exec = *e;
      } else if (key == "out") {
        if (!once(ln, key)) return;
        cfg.run.out = std::string(trim(value));
      } else {
        fail(ln, "unknown key run." + key);
      }
    }
  }
};

}  // namespace

ParseResult parse_config(std::string_view text) {
  Parser ps;
  std::size_t ln = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                          : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++ln;
    const std::size_t hash = raw.find('#');
    if (hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string_view line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        ps.fail(ln, "unterminated section header");
        continue;
      }
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!known_sections().count(name)) {
        ps.fail(ln, "unknown section [" + name + "]");
        ps.section.clear();
        continue;
      }
      ps.section = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      ps.fail(ln, "expected key = value");
      continue;
    }
    if (ps.section.empty()) {
      ps.fail(ln, "key outside any [section]");
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) {
      ps.fail(ln, "empty key");
      continue;
    }
    ps.handle(ln, key, value);
  }

  if (!ps.have_horizon) ps.fail(0, "missing required key grid.horizon");
  if (!ps.have_steps) ps.fail(0, "missing required key grid.steps");
  if (!ps.have_seed) ps.fail(0, "missing required key run.seed");
  if (!ps.have_paths) ps.fail(0, "missing required key run.paths");
  if (!ps.cfg.noise.r_jumps.empty() && ps.cfg.noise.r_mode != RSpec::Mode::jumps)
    ps.fail(0, "r_jump lines require r_mode = jumps");

  ParseResult out;
  out.diagnostics = std::move(ps.diags);
  if (out.diagnostics.empty()) out.config = std::move(ps.cfg);
  return out;
}

namespace {

void print_problem(std::string& s, const std::string& header, const ProblemParams& p) {
  s += "[" + header + "]\n";
  s += "name = " + p.name + "\n";
  s += "p = " + format_double(p.p) + "\n";
  s += "alpha = " + format_double(p.alpha) + "\n";
  s += "beta = " + format_double(p.beta) + "\n";
  s += "gamma = " + format_double(p.gamma) + "\n";
  s += "f0 = " + format_double(p.f0) + "\n";
  s += "driver_value = " + format_double(p.driver_value) + "\n";
  s += "kernel_scale = " + format_double(p.kernel_scale) + "\n";
  s += "terminal = " + terminal_name(p.terminal.base) + "\n";
  s += "terminal_scale = " + format_double(p.terminal.scale) + "\n";
  s += "terminal2 = " + terminal_name(p.terminal.base2) + "\n";
  s += "terminal2_scale = " + format_double(p.terminal.scale2) + "\n";
  s += "terminal_offset = " + format_double(p.terminal.offset) + "\n";
  s += "\n";
}

std::string join_doubles(std::span<const double> xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += " ";
    s += format_double(xs[i]);
  }
  return s;
}

}  // namespace

std::string print_config(const ExperimentConfig& cfg) {
  std::string s;
  s += "[grid]\n";
  s += "horizon = " + format_double(cfg.horizon) + "\n";
  s += "steps = " + std::to_string(cfg.steps) + "\n\n";

  s += "[noise]\n";
  s += "brownian_dim = " + std::to_string(cfg.noise.brownian_dim) + "\n";
  s += "extra_dim = " + std::to_string(cfg.noise.extra_dim) + "\n";
  for (const AtomLine& a : cfg.noise.atoms)
    s += "atom = " + join_doubles(a.mark) + " @ " + format_double(a.intensity) + "\n";
  s += "r_mode = " + r_mode_name(cfg.noise.r_mode) + "\n";
  s += "r_rate = " + format_double(cfg.noise.r_rate) + "\n";
  for (const auto& [t, x] : cfg.noise.r_jumps)
    s += "r_jump = " + format_double(t) + " @ " + format_double(x) + "\n";
  s += "\n";

  print_problem(s, "problem", cfg.problem);
  if (cfg.problem2) print_problem(s, "problem2", *cfg.problem2);

  s += "[solver]\n";
  s += "scheme = " + scheme_name(cfg.solver.scheme) + "\n";
  s += "degree = " + std::to_string(cfg.solver.degree) + "\n";
  s += "inner = " + std::to_string(cfg.solver.inner) + "\n";
  s += "picard_tol = " + format_double(cfg.solver.picard_tol) + "\n";
  s += "picard_max_iter = " + std::to_string(cfg.solver.picard_max_iter) + "\n";
  s += "damping = " + format_double(cfg.solver.damping) + "\n";
  if (!cfg.solver.p_trunc) {
    s += "trunc = auto\n";
  } else if (std::isinf(*cfg.solver.p_trunc)) {
    s += "trunc = none\n";
  } else {
    s += "trunc = " + format_double(*cfg.solver.p_trunc) + "\n";
  }
  s += "inner_seed = " + std::to_string(cfg.solver.inner_seed) + "\n\n";

  s += "[oracle]\n";
  s += "alpha = " + format_double(cfg.oracle.alpha) + "\n";
  if (!cfg.oracle.beta.empty()) s += "beta = " + join_doubles(cfg.oracle.beta) + "\n";
  if (!cfg.oracle.gamma.empty()) s += "gamma = " + join_doubles(cfg.oracle.gamma) + "\n";
  s += "forcing = " + format_double(cfg.oracle.forcing) + "\n\n";

  s += "[compare]\n";
  s += "r_scale_low = " + format_double(cfg.compare.r_scale_low) + "\n";
  s += "r_scale_high = " + format_double(cfg.compare.r_scale_high) + "\n\n";

  s += "[stopping]\n";
  s += "rho = " + format_double(cfg.stopping.rho) + "\n";
  s += "coord = " + std::to_string(cfg.stopping.coord) + "\n";
  s += "lo = " + format_double(cfg.stopping.lo) + "\n";
  s += "hi = " + format_double(cfg.stopping.hi) + "\n";
  if (!cfg.stopping.caps.empty()) s += "caps = " + join_doubles(cfg.stopping.caps) + "\n";
  s += "\n";

  if (!cfg.convergence_steps.empty()) {
    s += "[convergence]\n";
    s += "steps =";
    for (std::size_t n : cfg.convergence_steps) s += " " + std::to_string(n);
    s += "\n\n";
  }

  s += "[run]\n";
  s += "seed = " + std::to_string(cfg.run.seed) + "\n";
  s += "paths = " + std::to_string(cfg.run.paths) + "\n";
  s += "exec = " + exec_name(cfg.run.exec) + "\n";
  s += "out = " + cfg.run.out + "\n";
  return s;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(print_config(cfg)); }

NoiseModel build_noise(const NoiseConfig& noise) {
  std::vector<std::string> problems;
  NoiseModel model;
  model.brownian_dim = noise.brownian_dim;
  model.extra_dim = noise.extra_dim;
  if (!noise.atoms.empty()) {
    const std::size_t dim = noise.atoms.front().mark.size();
    std::vector<double> marks;
    std::vector<double> lams;
    for (const AtomLine& a : noise.atoms) {
      if (a.mark.size() != dim) {
        problems.push_back("atom lines must all have the same mark dimension");
        break;
      }
      marks.insert(marks.end(), a.mark.begin(), a.mark.end());
      lams.push_back(a.intensity);
    }
    if (problems.empty()) {
      try {
        model.marks = MarkSpace(dim, std::move(marks), std::move(lams));
      } catch (const std::invalid_argument& e) {
        problems.push_back(e.what());
      }
    }
  }
  model.r.mode = noise.r_mode;
  model.r.const_rate = noise.r_rate;
  if (noise.r_mode == RSpec::Mode::jumps) {
    for (const auto& [t, x] : noise.r_jumps) {
      model.r.jump_times.push_back(t);
      model.r.jump_sizes.push_back(x);
    }
    if (model.r.jump_times.empty())
      problems.push_back("r_mode = jumps needs at least one r_jump line");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return model;
}

TimeGrid build_grid(const ExperimentConfig& cfg) { return TimeGrid(cfg.horizon, cfg.steps); }

StoppingSpec build_stopping(const StoppingConfig& stopping) {
  if (!(stopping.lo < stopping.hi))
    throw ConfigError({"stopping.lo must be below stopping.hi"});
  StoppingSpec spec;
  spec.rho = stopping.rho;
  const std::size_t coord = stopping.coord;
  const double lo = stopping.lo;
  const double hi = stopping.hi;
  spec.inside = [coord, lo, hi](std::span<const double> state) {
    if (coord >= state.size()) throw SimulationError("stopping coordinate out of range");
    return state[coord] > lo && state[coord] < hi;
  };
  return spec;
}

}  // namespace gbsde
