#pragma once

/// \file transient.hpp
/// \brief Compatible initial data and backward-Euler time stepping.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "biot/direct.hpp"
#include "biot/forms.hpp"
#include "biot/model.hpp"
#include "biot/problem.hpp"
#include "biot/sparse_solve.hpp"

namespace biot {

struct BiotState {
  double t = 0.0;
  std::vector<double> u, pt, pp;
};

inline BiotState zero_state(const Spaces& s, double t = 0.0) {
  return {t, std::vector<double>(s.u.size(), 0.0), std::vector<double>(s.pt.size(), 0.0),
          std::vector<double>(s.pp.size(), 0.0)};
}

inline std::vector<double> concat(const BiotState& st) {
  std::vector<double> x;
  x.reserve(st.u.size() + st.pt.size() + st.pp.size());
  x.insert(x.end(), st.u.begin(), st.u.end());
  x.insert(x.end(), st.pt.begin(), st.pt.end());
  x.insert(x.end(), st.pp.begin(), st.pp.end());
  return x;
}

inline BiotState split(const Spaces& s, std::span<const double> x, double t) {
  const auto n = s.sizes();
  BiotState st;
  st.t = t;
  st.u.assign(x.begin(), x.begin() + n[0]);
  st.pt.assign(x.begin() + n[0], x.begin() + n[0] + n[1]);
  st.pp.assign(x.begin() + n[0] + n[1], x.end());
  return st;
}

class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StepSolver { kDirect, kMinres };

struct StepOptions {
  StepSolver solver = StepSolver::kDirect;
  double rtol = 1e-10;
  int maxit = 500;
  InnerChoice pt_inner = InnerChoice::kJacobi;
};

/// Values of the constrained monolithic dofs (in reduction order) at time t.
inline std::vector<double> constraint_values(const Spaces& s, const DirichletReduction& red, const ProblemData& data,
                                             double t) {
  const auto n = s.sizes();
  std::vector<double> v;
  v.reserve(red.constrained_dofs().size());
  for (int d : red.constrained_dofs()) {
    if (d < n[0]) {
      v.push_back(data.displacement ? data.displacement(s.u.node(d), t, s.u.component(d)) : 0.0);
    } else {
      const int k = d - n[0] - n[1];
      v.push_back(data.pore_pressure ? data.pore_pressure(s.pp.node(k), t, 0) : 0.0);
    }
  }
  return v;
}

/// Momentum load and, for the pressure-gradient stabilization, its
/// right-hand side on the p_t rows.
inline std::pair<std::vector<double>, std::vector<double>> momentum_and_stab_loads(const Spaces& s,
                                                                                   const ProblemData& data,
                                                                                   const ModelParams& p, double t) {
  std::vector<double> u = data.body_force ? assemble_vector_load(s.mesh, s.u, data.body_force, t)
                                          : std::vector<double>(s.u.size(), 0.0);
  if (data.traction) add_traction_load(s.mesh, s.topo, s.tags, s.u, data.traction, t, u);
  std::vector<double> pt(s.pt.size(), 0.0);
  if (s.disc == Discretization::kBrezziPitkaranta && data.body_force) {
    pt = assemble_stab_rhs(s.mesh, s.pt, data.body_force, p, t);
  }
  return {std::move(u), std::move(pt)};
}

namespace detail {

inline std::vector<double> concat3(const std::vector<double>& a, const std::vector<double>& b,
                                   const std::vector<double>& c) {
  std::vector<double> x(a);
  x.insert(x.end(), b.begin(), b.end());
  x.insert(x.end(), c.begin(), c.end());
  return x;
}

/// Direct solve; refines (at most twice) only while ||b - Ax|| > tol ||b||.
/// Returns the solution and its relative residual.
inline std::pair<std::vector<double>, double> refined_solve(const DirectSolver& solver, const SparseMatrix& a,
                                                            std::span<const double> b, double tol) {
  auto x = solver.solve(b);
  const double bn = norm2(b);
  double rel = 0.0;
  for (int it = 0;; ++it) {
    auto r = a * std::span<const double>(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    rel = bn > 0.0 ? norm2(r) / bn : norm2(r);
    if (rel <= tol || it == 2) break;
    const auto dx = solver.solve(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  }
  return {std::move(x), rel};
}

}  // namespace detail

struct InitialData {
  BiotState state;
  /// ||r|| of the momentum and total-pressure rows relative to ||b||.
  double residual = 0.0;
};

/// Initial data satisfying the two algebraic equations at t = 0:
///   (2 mu eps(u), eps(v)) + (p_t, div v)                      = (f(0), v) + <sigma n, v>
///   (div u, q_t) - s_h(p_t, q_t) - (p_t / lambda, q_t) - (alpha p_p / lambda, q_t) = s~_h(f(0), q_t)
///   -(alpha p_t / lambda, q_p) - (kappa grad p_p, grad q_p)  = -(alpha p_t(0) / lambda, q_p)
///                                                              - (kappa grad p_p(0), grad q_p)
inline InitialData compatible_initial_data(const Spaces& s, const UnitForms& f, const ModelParams& p,
                                           const ProblemData& data, const ScalarFn& pt0, const VectorFn& grad_pp0) {
  p.validate();
  OperatorCoefficients c = static_coefficients(p);
  c.pp_mass = 0.0;
  c.pp_stiff = p.kappa;
  const StaticOperator op = build_static_operator(s, f, c);

  auto [bu, bt] = momentum_and_stab_loads(s, data, p, 0.0);
  std::vector<double> bp(s.pp.size(), 0.0);
  if (pt0 && p.lambda_inv != 0.0) {
    const auto m = assemble_scalar_load(s.mesh, s.pp, pt0, 0.0);
    for (std::size_t i = 0; i < bp.size(); ++i) bp[i] -= p.alpha * p.lambda_inv * m[i];
  }
  if (grad_pp0) {
    const auto k = assemble_gradient_load(s.mesh, s.pp, grad_pp0, p.kappa, 0.0);
    for (std::size_t i = 0; i < bp.size(); ++i) bp[i] -= k[i];
  }
  const auto full_rhs = detail::concat3(bu, bt, bp);
  const auto values = constraint_values(s, op.reduction, data, 0.0);
  const auto rhs = op.reduction.reduce_rhs(full_rhs, values);

  InitialData out;
  std::vector<double> x;
  try {
    const DirectSolver solver(op.matrix());
    x = detail::refined_solve(solver, op.matrix(), rhs, 1e-13).first;
  } catch (const DirectSolveError& e) {
    throw SolverFailure(std::string("compatible initial data: ") + e.what());
  }
  const auto r = op.matrix() * std::span<const double>(x);
  const int rows12 = op.free_sizes[0] + op.free_sizes[1];
  double rn = 0.0;
  for (int i = 0; i < rows12; ++i) rn += (rhs[i] - r[i]) * (rhs[i] - r[i]);
  const double bn = norm2(rhs);
  out.residual = bn > 0.0 ? std::sqrt(rn) / bn : std::sqrt(rn);
  if (!(out.residual <= 1e-9)) {
    throw SolverFailure("compatible initial data: residual " + std::to_string(out.residual) + " exceeds 1e-9");
  }
  out.state = split(s, op.reduction.expand(x, values), 0.0);
  return out;
}

/// Backward Euler for the three-field system. The static operator and the
/// solver (factorization or block preconditioner) are built once.
class TimeStepper {
 public:
  TimeStepper(const Spaces& s, const UnitForms& f, const ModelParams& p, ProblemData data, StepOptions opt = {})
      : spaces_(&s), params_(p), data_(std::move(data)), opt_(opt) {
    p.validate();
    op_ = build_static_operator(s, f, static_coefficients(p));
    history_cross_ = f.mass_cross.transpose();
    history_mass_ = f.mass_pp;
    for (const SeparableLoad& part : data_.separable) {
      ProblemData d;
      d.body_force = part.body_force;
      d.traction = part.traction;
      auto [bu, bt] = momentum_and_stab_loads(s, d, p, 0.0);
      std::vector<double> bp = part.source ? assemble_scalar_load(s.mesh, s.pp, part.source, 0.0)
                                           : std::vector<double>(s.pp.size(), 0.0);
      separable_.push_back({part.time, detail::concat3(bu, bt, bp)});
    }
    if (opt_.solver == StepSolver::kDirect) {
      try {
        direct_ = std::make_unique<DirectSolver>(op_.matrix());
      } catch (const DirectSolveError& e) {
        throw SolverFailure(e.what());
      }
    } else {
      PreconditionerFactory factory(s, f, opt_.pt_inner);
      precond_ = factory.make(p);
    }
  }

  const StaticOperator& op() const { return op_; }
  const ModelParams& params() const { return params_; }
  std::string solver_name() const {
    return direct_ ? "direct-" + direct_->method() : "minres";
  }

  /// Right-hand side of the free rows for a step from `state` to t_next,
  /// together with the constrained values at t_next.
  std::pair<std::vector<double>, std::vector<double>> step_rhs(const BiotState& state, double t_next) const {
    const Spaces& s = *spaces_;
    const auto n = s.sizes();
    std::vector<double> bu, bt, bp;
    if (separable_.empty()) {
      std::tie(bu, bt) = momentum_and_stab_loads(s, data_, params_, t_next);
      bp = data_.source ? assemble_scalar_load(s.mesh, s.pp, data_.source, t_next)
                        : std::vector<double>(s.pp.size(), 0.0);
    } else {
      std::vector<double> sum(n[0] + n[1] + n[2], 0.0);
      for (const auto& [time, load] : separable_) {
        const double c = time(t_next);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += c * load[i];
      }
      bu.assign(sum.begin(), sum.begin() + n[0]);
      bt.assign(sum.begin() + n[0], sum.begin() + n[0] + n[1]);
      bp.assign(sum.begin() + n[0] + n[1], sum.end());
    }
    for (double& v : bp) v *= -params_.dt;
    const double cross = params_.alpha * params_.lambda_inv;
    const double w = params_.s0 + params_.alpha * params_.alpha * params_.lambda_inv;
    if (cross != 0.0) history_cross_.multiply_add(-cross, state.pt, bp);
    if (w != 0.0) history_mass_.multiply_add(-w, state.pp, bp);
    const auto full = detail::concat3(bu, bt, bp);
    auto values = constraint_values(s, op_.reduction, data_, t_next);
    return {op_.reduction.reduce_rhs(full, values), std::move(values)};
  }

  std::pair<BiotState, SolveReport> step(const BiotState& state, double t_next) const {
    const auto start = std::chrono::steady_clock::now();
    auto [rhs, values] = step_rhs(state, t_next);
    SolveReport rep;
    std::vector<double> x;
    if (direct_) {
      double rel = 0.0;
      std::tie(x, rel) = detail::refined_solve(*direct_, op_.matrix(), rhs, opt_.rtol);
      rep.solver = solver_name();
      rep.residual_history = {1.0, rel};
      rep.converged = rel <= std::max(opt_.rtol, 1e-8);
      if (!rep.converged) throw SolverFailure("direct solve residual " + std::to_string(rel) + " at t = " +
                                              std::to_string(t_next));
    } else {
      x = op_.reduction.restrict_to_free(concat(state));
      rep = minres(as_operator(op_.matrix()), as_operator(*precond_), rhs, x, {opt_.rtol, opt_.maxit});
      if (!rep.converged) {
        throw SolverFailure("MinRes did not converge at t = " + std::to_string(t_next) + " after " +
                            std::to_string(rep.iterations) + " iterations: " + rep.message);
      }
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return {split(*spaces_, op_.reduction.expand(x, values), t_next), std::move(rep)};
  }

 private:
  const Spaces* spaces_;
  ModelParams params_;
  ProblemData data_;
  StepOptions opt_;
  StaticOperator op_;
  SparseMatrix history_cross_;  // (p_t, q_p)
  SparseMatrix history_mass_;   // (p_p, q_p)
  std::vector<std::pair<std::function<double(double)>, std::vector<double>>> separable_;  // unscaled (f, 0|stab, g)
  std::unique_ptr<DirectSolver> direct_;
  std::optional<BlockPreconditioner> precond_;
};

struct TransientSummary {
  int steps = 0;
  int max_iterations = 0;
  double seconds = 0.0;
};

/// Advances `state` by `steps` steps of size params.dt.
inline TransientSummary run_steps(const TimeStepper& stepper, BiotState& state, int steps,
                                  const std::function<void(const BiotState&)>& observer = nullptr) {
  TransientSummary sum;
  const double t0 = state.t;
  for (int n = 1; n <= steps; ++n) {
    auto [next, rep] = stepper.step(state, t0 + n * stepper.params().dt);
    state = std::move(next);
    sum.steps = n;
    sum.max_iterations = std::max(sum.max_iterations, rep.iterations);
    sum.seconds += rep.seconds;
    if (observer) observer(state);
  }
  return sum;
}

}  // namespace biot
