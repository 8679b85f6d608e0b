#pragma once

/// \file problem.hpp
/// \brief Problem data (forcing, sources, boundary data), exact fields and
/// the manufactured solution used for convergence studies.

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "biot/fem.hpp"
#include "biot/forms.hpp"
#include "biot/mesh.hpp"

namespace biot {

/// One term phi(t) * (f(x), g(x), sigma n(x)) of a space-time separable load.
/// The spatial callbacks are evaluated with t = 0.
struct SeparableLoad {
  std::function<double(double)> time;
  VectorFn body_force;
  ScalarFn source;
  TractionFn traction;
};

/// Forcing and boundary data. Empty callbacks mean zero.
struct ProblemData {
  VectorFn body_force;      // f
  ScalarFn source;          // g
  TractionFn traction;      // sigma n on Gamma_t
  FieldFn displacement;     // u on Gamma_d, by component
  FieldFn pore_pressure;    // p_p on Gamma_p (component argument ignored)
  /// Optional: the same f, g and traction written as a sum of separable
  /// terms. The time stepper then assembles each spatial load once.
  std::vector<SeparableLoad> separable;
};

using GradientFn = std::function<std::array<Vec2, 2>(const Point& x, double t)>;  // row c = grad u_c

/// Closed-form fields for error measurement and initial data.
struct ExactSolution {
  VectorFn u;
  GradientFn grad_u;
  ScalarFn pt;
  ScalarFn pp;
  VectorFn grad_pp;
};

struct ManufacturedProblem {
  ModelParams params;
  ExactSolution exact;
  ProblemData data;
};

/// mu = 10, lambda = 15, alpha = 1, s0 = 1, kappa = 1.
inline ModelParams manufactured_params() {
  ModelParams p;
  p.mu = 10.0;
  p.lambda_inv = 1.0 / 15.0;
  p.alpha = 1.0;
  p.s0 = 1.0;
  p.kappa = 1.0;
  return p;
}

/// u = (sin(pi x) sin(1 + t), sin(y) sin(t)), p_p = x^2 y^2 cos(t).
/// The strain is diagonal, so sigma n = (sigma_xx n_x, sigma_yy n_y).
/// All data are combinations of sin(1 + t), cos(1 + t), sin t and cos t;
/// the spatial coefficients below are indexed in that order.
inline ManufacturedProblem manufactured_problem(const ModelParams& params) {
  using std::cos;
  using std::sin;
  using Modes = std::array<double, 4>;
  constexpr double pi = std::numbers::pi;
  const double mu = params.mu, lam = params.lambda();
  const double alpha = params.alpha, s0 = params.s0, kappa = params.kappa;

  auto modes = [](double t) -> Modes { return {sin(1.0 + t), cos(1.0 + t), sin(t), cos(t)}; };
  auto mix = [](const Modes& c, const Modes& m) { return c[0] * m[0] + c[1] * m[1] + c[2] * m[2] + c[3] * m[3]; };

  // lambda div u - alpha p; the lambda = infinity case is not used with this solution.
  auto pt_c = [=](const Point& x) -> Modes {
    return {lam * pi * cos(pi * x.x), 0.0, lam * cos(x.y), -alpha * x.x * x.x * x.y * x.y};
  };
  auto fx_c = [=](const Point& x) -> Modes {
    return {(2.0 * mu + lam) * pi * pi * sin(pi * x.x), 0.0, 0.0, 2.0 * alpha * x.x * x.y * x.y};
  };
  auto fy_c = [=](const Point& x) -> Modes {
    return {0.0, 0.0, (2.0 * mu + lam) * sin(x.y), 2.0 * alpha * x.x * x.x * x.y};
  };
  // s0 dp/dt + alpha d(div u)/dt - kappa lap p
  auto g_c = [=](const Point& x) -> Modes {
    return {0.0, alpha * pi * cos(pi * x.x), -s0 * x.x * x.x * x.y * x.y,
            alpha * cos(x.y) - 2.0 * kappa * (x.x * x.x + x.y * x.y)};
  };
  auto sxx_c = [=](const Point& x) -> Modes {
    Modes c = pt_c(x);
    c[0] += 2.0 * mu * pi * cos(pi * x.x);
    return c;
  };
  auto syy_c = [=](const Point& x) -> Modes {
    Modes c = pt_c(x);
    c[2] += 2.0 * mu * cos(x.y);
    return c;
  };

  ManufacturedProblem m;
  m.params = params;
  m.exact.u = [](const Point& x, double t) -> Vec2 { return {sin(pi * x.x) * sin(1.0 + t), sin(x.y) * sin(t)}; };
  m.exact.grad_u = [](const Point& x, double t) -> std::array<Vec2, 2> {
    return {Vec2{pi * cos(pi * x.x) * sin(1.0 + t), 0.0}, Vec2{0.0, cos(x.y) * sin(t)}};
  };
  m.exact.pt = [=](const Point& x, double t) { return mix(pt_c(x), modes(t)); };
  m.exact.pp = [](const Point& x, double t) { return x.x * x.x * x.y * x.y * cos(t); };
  m.exact.grad_pp = [](const Point& x, double t) -> Vec2 {
    return {2.0 * x.x * x.y * x.y * cos(t), 2.0 * x.x * x.x * x.y * cos(t)};
  };

  m.data.body_force = [=](const Point& x, double t) -> Vec2 {
    const Modes w = modes(t);
    return {mix(fx_c(x), w), mix(fy_c(x), w)};
  };
  m.data.source = [=](const Point& x, double t) { return mix(g_c(x), modes(t)); };
  m.data.traction = [=](const Point& x, double t, const Point& n) -> Vec2 {
    const Modes w = modes(t);
    return {mix(sxx_c(x), w) * n.x, mix(syy_c(x), w) * n.y};
  };
  m.data.displacement = [u = m.exact.u](const Point& x, double t, int comp) { return u(x, t)[comp]; };
  m.data.pore_pressure = [pp = m.exact.pp](const Point& x, double t, int) { return pp(x, t); };

  for (int k = 0; k < 4; ++k) {
    SeparableLoad part;
    part.time = [=](double t) { return modes(t)[k]; };
    part.body_force = [=](const Point& x, double) -> Vec2 { return {fx_c(x)[k], fy_c(x)[k]}; };
    part.source = [=](const Point& x, double) { return g_c(x)[k]; };
    part.traction = [=](const Point& x, double, const Point& n) -> Vec2 {
      return {sxx_c(x)[k] * n.x, syy_c(x)[k] * n.y};
    };
    m.data.separable.push_back(std::move(part));
  }
  return m;
}

}  // namespace biot
