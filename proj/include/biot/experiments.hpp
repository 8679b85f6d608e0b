#pragma once

/// \file experiments.hpp
/// \brief Experiment drivers behind the command line tool: convergence
/// studies, preconditioner sweeps, energy and inf-sup diagnostics, and the
/// CSV / markdown tables they produce.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "biot/diagnostics.hpp"
#include "biot/model.hpp"
#include "biot/problem.hpp"
#include "biot/sparse_solve.hpp"
#include "biot/transient.hpp"

namespace biot {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::string subcommand;
  std::vector<Discretization> methods{Discretization::kTaylorHood};
  std::vector<int> meshes;  // empty: subcommand default
  std::vector<double> mu{1.0, 1e3, 1e6};
  std::vector<double> lambda_ratio{1.0, 1e3, 1e6};  // lambda / mu; inf allowed
  std::vector<double> kappa{1.0, 1e-3, 1e-6, 1e-9};
  double alpha = 1.0;
  double s0 = 1.0;
  double gamma2 = 1.0;
  double jump_h_power = 1.0;  // edge-length exponent of the P1-P0 jump term
  double dt = 1.0;            // static step for precond / infsup / energy
  double dt_factor = 1.0;     // converge: dt = dt_factor * h^2
  double final_time = 0.5;
  double rtol = 1e-6;
  double step_rtol = 1e-10;
  int maxit = 500;
  int rhs_count = 10;
  int steps = 100;
  std::uint64_t seed = 42;
  StepSolver step_solver = StepSolver::kDirect;
  BoundarySpec boundary;
  std::string out_dir = "results";
  bool timing = true;
  bool allow_large = false;  // converge with N > 64
  bool quiet = false;

  /// Meshes, falling back to the subcommand default.
  std::vector<int> mesh_list() const {
    if (!meshes.empty()) return meshes;
    if (subcommand == "converge") return {8, 16, 32, 64};
    if (subcommand == "precond") return {16, 32, 64};
    if (subcommand == "energy") return {8};
    return {4, 8, 16};
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    auto positive = [&](const std::vector<double>& v, const char* name) {
      if (v.empty()) fail(std::string(name) + " list is empty");
      for (double x : v) {
        if (!(x > 0.0)) fail(std::string(name) + " values must be positive");
      }
    };
    if (methods.empty()) fail("method list is empty");
    for (int n : mesh_list()) {
      if (n < 1) fail("mesh sizes must be positive");
    }
    positive(mu, "mu");
    positive(lambda_ratio, "lambda-ratio");
    positive(kappa, "kappa");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
    if (!(s0 >= 0.0)) fail("s0 must be >= 0");
    if (!(gamma2 > 0.0)) fail("gamma2 must be positive");
    if (!std::isfinite(jump_h_power)) fail("jump-h-power must be finite");
    if (!(dt > 0.0) || !(dt_factor > 0.0)) fail("time step must be positive");
    if (!(final_time >= 0.0)) fail("final time must be >= 0");
    if (!(rtol > 0.0 && rtol < 1.0) || !(step_rtol > 0.0 && step_rtol < 1.0)) fail("tolerances must lie in (0, 1)");
    if (maxit < 1 || rhs_count < 1) fail("maxit and rhs count must be positive");
    if (steps < 0) fail("steps must be >= 0");
    if (subcommand == "converge" && !allow_large) {
      for (int n : mesh_list()) {
        if (n > 64) fail("N > 64 needs --allow-large");
      }
    }
    if (subcommand == "infsup") {
      for (int n : mesh_list()) {
        if (n > 16) fail("infsup is limited to N <= 16");
      }
    }
    try {
      tag_boundary(unit_square_mesh(1), build_edges(unit_square_mesh(1)), boundary);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  /// Model parameters of one sweep cell; kappa enters the static step as kappa * dt.
  ModelParams cell_params(double mu_value, double ratio, double kappa_value) const {
    ModelParams p;
    p.mu = mu_value;
    p.lambda_inv = std::isinf(ratio) ? 0.0 : 1.0 / (mu_value * ratio);
    p.alpha = alpha;
    p.s0 = s0;
    p.kappa = kappa_value;
    p.gamma2 = gamma2;
    p.dt = dt;
    return p;
  }
};

/// A table of preformatted cells. CSV and markdown are written from the same
/// strings.
struct Table {
  std::string title;
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> notes;  // markdown only, after the table
};

inline std::string format_sci(double v, int digits = 3) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits, v);
  return buf;
}

inline std::string format_fixed(double v, int digits = 2) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Shortest round-trip representation.
inline std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// RFC 4180: CRLF line endings, quoted fields where needed.
inline void write_csv(std::ostream& os, const Table& t) {
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
    os << "\r\n";
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
}

inline void write_markdown(std::ostream& os, const Table& t) {
  os << "# " << t.title << "\n\n";
  for (const auto& [k, v] : t.meta) os << "- " << k << ": " << v << "\n";
  if (!t.meta.empty()) os << "\n";
  auto line = [&os](const std::vector<std::string>& cells) {
    os << "|";
    for (const auto& c : cells) os << " " << c << " |";
    os << "\n";
  };
  line(t.columns);
  os << "|";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << "---|";
  os << "\n";
  for (const auto& r : t.rows) line(r);
  if (!t.notes.empty()) os << "\n";
  for (const auto& n : t.notes) os << n << "\n";
}

/// Writes <dir>/<name>.csv and <dir>/<name>.md.
inline void write_outputs(const std::string& dir, const std::string& name, const Table& t) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base = std::filesystem::path(dir) / name;
  std::ofstream csv(base.string() + ".csv", std::ios::binary);
  std::ofstream md(base.string() + ".md", std::ios::binary);
  if (!csv || !md) throw std::runtime_error("cannot write outputs under " + dir);
  write_csv(csv, t);
  write_markdown(md, t);
}

namespace detail {

inline void log_line(const ExperimentConfig& c, const std::string& msg) {
  if (!c.quiet) std::fprintf(stderr, "%s\n", msg.c_str());
}

inline std::string join_methods(const std::vector<Discretization>& m) {
  std::string s;
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + to_string(m[i]);
  return s;
}

template <class T>
std::string join_values(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if constexpr (std::is_integral_v<T>) s += (i ? "," : "") + std::to_string(v[i]);
    else s += (i ? "," : "") + format_value(v[i]);
  }
  return s;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

// ---------------------------------------------------------------- converge

struct ConvergenceRow {
  Discretization method{};
  int n = 0;
  int steps = 0;
  double dt = 0.0;
  ErrorReport errors;
  double seconds = 0.0;
};

/// Rates between consecutive rows of the same method; NaN for the first.
struct ConvergenceRates {
  double pt = std::numeric_limits<double>::quiet_NaN();
  double pp = std::numeric_limits<double>::quiet_NaN();
  double u = std::numeric_limits<double>::quiet_NaN();
  double pp_kappa = std::numeric_limits<double>::quiet_NaN();
};

inline ConvergenceRates convergence_rates(const ConvergenceRow& coarse, const ConvergenceRow& fine) {
  return {observed_rate(coarse.errors.pt_weighted, fine.errors.pt_weighted, coarse.n, fine.n),
          observed_rate(coarse.errors.pp_l2, fine.errors.pp_l2, coarse.n, fine.n),
          observed_rate(coarse.errors.u_energy, fine.errors.u_energy, coarse.n, fine.n),
          observed_rate(coarse.errors.pp_h1_kappa, fine.errors.pp_h1_kappa, coarse.n, fine.n)};
}

/// One manufactured-solution run to the final time on an N x N mesh.
inline ConvergenceRow converge_one(const ExperimentConfig& c, Discretization method, int n) {
  const auto t0 = std::chrono::steady_clock::now();
  ModelParams p = manufactured_params();
  p.gamma2 = c.gamma2;
  const double h = 1.0 / n;
  const int steps = static_cast<int>(std::lround(c.final_time / (c.dt_factor * h * h)));
  p.dt = steps > 0 ? c.final_time / steps : c.dt_factor * h * h;
  const ManufacturedProblem mp = manufactured_problem(p);
  const Spaces s = make_spaces(n, method, c.boundary);
  const UnitForms f = assemble_unit_forms(s, c.jump_h_power);
  BiotState st = compatible_initial_data(s, f, p, mp.data, mp.exact.pt, mp.exact.grad_pp).state;
  StepOptions opt;
  opt.solver = c.step_solver;
  opt.rtol = c.step_rtol;
  opt.maxit = c.maxit;
  if (steps > 0) {
    const TimeStepper stepper(s, f, p, mp.data, opt);
    run_steps(stepper, st, steps);
  }
  ConvergenceRow row;
  row.method = method;
  row.n = n;
  row.steps = steps;
  row.dt = p.dt;
  row.errors = error_norms(s, st, mp.exact, p);
  row.seconds = detail::seconds_since(t0);
  return row;
}

inline std::vector<ConvergenceRow> run_converge(const ExperimentConfig& c) {
  c.validate();
  std::vector<ConvergenceRow> rows;
  for (Discretization m : c.methods) {
    for (int n : c.mesh_list()) {
      rows.push_back(converge_one(c, m, n));
      const auto& r = rows.back();
      detail::log_line(c, "converge " + to_string(m) + " N=" + std::to_string(n) + " steps=" +
                              std::to_string(r.steps) + " u=" + format_sci(r.errors.u_energy) + " (" +
                              format_fixed(r.seconds, 1) + " s)");
    }
  }
  return rows;
}

/// Error columns: p_t in ((2 mu)^-1 e, e)^1/2, p_p in L2, u in
/// (2 mu eps(e), eps(e))^1/2 and p_p in (kappa grad e, grad e)^1/2. Plain L2
/// of p_t and full H1 of u follow as extra columns.
inline Table converge_table(const ExperimentConfig& c, const std::vector<ConvergenceRow>& rows) {
  Table t;
  t.title = "Errors and convergence rates at t = " + format_value(c.final_time);
  t.meta = {{"methods", detail::join_methods(c.methods)},
            {"problem", "manufactured, mu=10 lambda=15 alpha=1 s0=1 kappa=1"},
            {"time step", "backward Euler, dt = " + format_value(c.dt_factor) + " h^2"},
            {"gamma2", format_value(c.gamma2)},
            {"p1-p0 jump weight", "h_e^" + format_value(c.jump_h_power)},
            {"step solver", c.step_solver == StepSolver::kDirect ? "sparse LDL^T" : "MinRes"},
            {"pore load", "-dt (g, q_p)"},
            {"norms", "pt: ((2mu)^-1 e,e)^1/2; pp: L2; u: (2mu eps(e),eps(e))^1/2; ppk: (kappa grad e,grad e)^1/2"}};
  t.columns = {"method", "N", "steps", "pt_err", "pt_rate", "pp_err", "pp_rate", "u_err", "u_rate",
               "ppk_err", "ppk_rate", "pt_l2", "u_h1"};
  const ConvergenceRow* prev = nullptr;
  for (const auto& r : rows) {
    ConvergenceRates rate;
    if (prev && prev->method == r.method) rate = convergence_rates(*prev, r);
    auto rs = [](double v) { return std::isnan(v) ? std::string("-") : format_fixed(v); };
    t.rows.push_back({to_string(r.method), std::to_string(r.n), std::to_string(r.steps),
                      format_sci(r.errors.pt_weighted), rs(rate.pt), format_sci(r.errors.pp_l2), rs(rate.pp),
                      format_sci(r.errors.u_energy), rs(rate.u), format_sci(r.errors.pp_h1_kappa), rs(rate.pp_kappa),
                      format_sci(r.errors.pt_l2), format_sci(r.errors.u_h1)});
    prev = &r;
  }
  return t;
}

// ---------------------------------------------------------------- precond

struct PrecondCell {
  Discretization method{};
  int n = 0;
  double mu = 0.0, lambda_ratio = 0.0, kappa = 0.0;
  int iterations = 0;       // max over the right-hand sides
  bool converged = true;
  double mean_seconds = 0.0;  // per solve, setup excluded
};

/// MinRes with the block-diagonal preconditioner on random right-hand sides,
/// over methods x N x mu x lambda/mu x kappa.
inline std::vector<PrecondCell> run_precond(const ExperimentConfig& c) {
  c.validate();
  std::vector<PrecondCell> cells;
  for (Discretization m : c.methods) {
    for (int n : c.mesh_list()) {
      const Spaces s = make_spaces(n, m, c.boundary);
      const UnitForms f = assemble_unit_forms(s, c.jump_h_power);
      PreconditionerFactory factory(s, f);
      for (double mu : c.mu) {
        for (double ratio : c.lambda_ratio) {
          for (double kappa : c.kappa) {
            const ModelParams p = c.cell_params(mu, ratio, kappa);
            const StaticOperator op = build_static_operator(s, f, static_coefficients(p));
            const BlockPreconditioner pc = factory.make(p);
            PrecondCell cell{m, n, mu, ratio, kappa};
            SplitMix64 rng(c.seed);
            double total = 0.0;
            for (int r = 0; r < c.rhs_count; ++r) {
              const auto b = random_vector(op.matrix().rows, rng);
              std::vector<double> x(b.size(), 0.0);
              const auto rep = minres(as_operator(op.matrix()), as_operator(pc), b, x, {c.rtol, c.maxit});
              cell.iterations = std::max(cell.iterations, rep.iterations);
              cell.converged = cell.converged && rep.converged;
              total += rep.seconds;
            }
            cell.mean_seconds = total / c.rhs_count;
            cells.push_back(cell);
          }
        }
      }
      detail::log_line(c, "precond " + to_string(m) + " N=" + std::to_string(n) + " done");
    }
  }
  return cells;
}

struct IterationSpread {
  int min = 0, max = 0;
  double ratio() const { return min > 0 ? static_cast<double>(max) / min : std::numeric_limits<double>::infinity(); }
};

inline IterationSpread iteration_spread(const std::vector<PrecondCell>& cells) {
  IterationSpread s{std::numeric_limits<int>::max(), 0};
  for (const auto& c : cells) {
    s.min = std::min(s.min, c.iterations);
    s.max = std::max(s.max, c.iterations);
  }
  if (cells.empty()) s.min = 0;
  return s;
}

inline Table precond_table(const ExperimentConfig& c, const std::vector<PrecondCell>& cells) {
  Table t;
  t.title = "MinRes iterations with the block-diagonal preconditioner";
  t.meta = {{"methods", detail::join_methods(c.methods)},
            {"rtol", format_value(c.rtol)},
            {"maxit", std::to_string(c.maxit)},
            {"right-hand sides", std::to_string(c.rhs_count) + " per cell, uniform in [-1,1], splitmix64 seed " +
                                     std::to_string(c.seed)},
            {"iterations", "maximum over the right-hand sides"},
            {"time", c.timing ? "mean seconds per solve, preconditioner setup excluded" : "not recorded"},
            {"alpha, s0, gamma2, dt", format_value(c.alpha) + ", " + format_value(c.s0) + ", " +
                                          format_value(c.gamma2) + ", " + format_value(c.dt)},
            {"inner solves", "exact: sparse Cholesky, Jacobi for the Taylor-Hood p_t mass"}};
  t.columns = {"method", "N", "mu", "lambda_ratio", "kappa", "iterations", "converged"};
  if (c.timing) t.columns.push_back("seconds");
  for (const auto& cell : cells) {
    t.rows.push_back({to_string(cell.method), std::to_string(cell.n), format_value(cell.mu),
                      format_value(cell.lambda_ratio), format_value(cell.kappa), std::to_string(cell.iterations),
                      cell.converged ? "yes" : "no"});
    if (c.timing) t.rows.back().push_back(format_sci(cell.mean_seconds, 2));
  }
  for (Discretization m : c.methods) {
    std::vector<PrecondCell> mine;
    for (const auto& cell : cells) {
      if (cell.method == m) mine.push_back(cell);
    }
    const auto spread = iteration_spread(mine);
    t.notes.push_back("- " + to_string(m) + ": iterations " + std::to_string(spread.min) + " to " +
                      std::to_string(spread.max) + ", max/min " + format_fixed(spread.ratio()));
  }
  return t;
}

// ---------------------------------------------------------------- energy

struct EnergyRun {
  Discretization method{};
  int n = 0;
  EnergyReport report;
};

inline std::vector<EnergyRun> run_energy(const ExperimentConfig& c) {
  c.validate();
  std::vector<EnergyRun> runs;
  const ModelParams p = c.cell_params(c.mu.front(), c.lambda_ratio.front(), c.kappa.front());
  StepOptions opt;
  opt.rtol = c.step_rtol;
  for (Discretization m : c.methods) {
    for (int n : c.mesh_list()) {
      const Spaces s = make_spaces(n, m, c.boundary);
      runs.push_back({m, n, energy_check(s, p, c.steps, c.seed, opt)});
      detail::log_line(c, "energy " + to_string(m) + " N=" + std::to_string(n) + " max increase " +
                              format_sci(runs.back().report.max_rel_increase, 2));
    }
  }
  return runs;
}

inline Table energy_table(const ExperimentConfig& c, const std::vector<EnergyRun>& runs) {
  Table t;
  t.title = "Discrete energy under backward Euler, zero forcing";
  t.meta = {{"methods", detail::join_methods(c.methods)},
            {"mu, lambda/mu, kappa", format_value(c.mu.front()) + ", " + format_value(c.lambda_ratio.front()) + ", " +
                                         format_value(c.kappa.front())},
            {"alpha, s0, gamma2, dt", format_value(c.alpha) + ", " + format_value(c.s0) + ", " +
                                          format_value(c.gamma2) + ", " + format_value(c.dt)},
            {"steps", std::to_string(c.steps)},
            {"initial data", "compatible, random smooth p_p(0), seed " + std::to_string(c.seed)}};
  t.columns = {"method", "N", "step", "energy", "rel_change"};
  for (const auto& r : runs) {
    const auto& e = r.report.energy;
    for (std::size_t k = 0; k < e.size(); ++k) {
      const double rel = (k == 0 || e[k - 1] == 0.0) ? 0.0 : (e[k] - e[k - 1]) / e[k - 1];
      t.rows.push_back({to_string(r.method), std::to_string(r.n), std::to_string(k), format_sci(e[k], 12),
                        k == 0 ? std::string("-") : format_sci(rel, 3)});
    }
    const bool pass = r.report.max_rel_increase <= 1e-12;
    t.notes.push_back("- " + to_string(r.method) + " N=" + std::to_string(r.n) + ": max relative increase " +
                      format_sci(r.report.max_rel_increase, 2) + ", X_n/X_0 = " +
                      format_sci(r.report.final_ratio, 6) + "; max increase <= 1e-12: " + (pass ? "PASS" : "FAIL"));
  }
  return t;
}

// ---------------------------------------------------------------- infsup

struct InfSupCell {
  Discretization method{};
  int n = 0;
  double mu = 0.0, lambda_ratio = 0.0, kappa = 0.0;
  InfSupResult result;
};

inline std::vector<InfSupCell> run_infsup(const ExperimentConfig& c) {
  c.validate();
  std::vector<InfSupCell> cells;
  for (Discretization m : c.methods) {
    for (int n : c.mesh_list()) {
      const Spaces s = make_spaces(n, m, c.boundary);
      for (double mu : c.mu) {
        for (double ratio : c.lambda_ratio) {
          for (double kappa : c.kappa) {
            const ModelParams p = c.cell_params(mu, ratio, kappa);
            cells.push_back({m, n, mu, ratio, kappa, infsup_estimate(s, p, c.maxit)});
          }
        }
      }
      detail::log_line(c, "infsup " + to_string(m) + " N=" + std::to_string(n) + " done");
    }
  }
  return cells;
}

inline Table infsup_table(const ExperimentConfig& c, const std::vector<InfSupCell>& cells) {
  Table t;
  t.title = "Discrete inf-sup constant in the parameter-dependent norm";
  t.meta = {{"methods", detail::join_methods(c.methods)},
            {"alpha, s0, gamma2, dt", format_value(c.alpha) + ", " + format_value(c.s0) + ", " +
                                          format_value(c.gamma2) + ", " + format_value(c.dt)},
            {"estimator", "Lanczos on the norm-preconditioned operator, beta = 1 / max |theta|"}};
  t.columns = {"method", "N", "mu", "lambda_ratio", "kappa", "beta", "iterations", "converged"};
  for (const auto& cell : cells) {
    t.rows.push_back({to_string(cell.method), std::to_string(cell.n), format_value(cell.mu),
                      format_value(cell.lambda_ratio), format_value(cell.kappa), format_sci(cell.result.beta, 6),
                      std::to_string(cell.result.iterations), cell.result.converged ? "yes" : "no"});
  }
  for (Discretization m : c.methods) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& cell : cells) {
      if (cell.method != m) continue;
      lo = std::min(lo, cell.result.beta);
      hi = std::max(hi, cell.result.beta);
    }
    if (hi > 0.0) {
      t.notes.push_back("- " + to_string(m) + ": beta in [" + format_sci(lo, 4) + ", " + format_sci(hi, 4) +
                        "], max/min " + format_fixed(hi / lo, 3));
    }
  }
  return t;
}

}  // namespace biot
