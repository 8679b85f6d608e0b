#pragma once

/// \file diagnostics.hpp
/// \brief Error norms against exact fields, the discrete energy of the
/// three-field system and estimates of the discrete inf-sup constant.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "biot/direct.hpp"
#include "biot/model.hpp"
#include "biot/problem.hpp"
#include "biot/transient.hpp"

namespace biot {

/// splitmix64
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform on [lo, hi] with 53 random bits.
  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53); }

 private:
  std::uint64_t state_;
};

inline std::vector<double> random_vector(std::size_t n, SplitMix64& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

struct ErrorReport {
  double pt_l2 = 0.0;
  double pp_l2 = 0.0;
  double u_h1 = 0.0;        // full H^1 norm
  double pp_h1_kappa = 0.0;  // (kappa grad e, grad e)^1/2
  double u_energy = 0.0;     // (2 mu eps(e), eps(e))^1/2
  double pt_weighted = 0.0;  // ((2 mu)^-1 e, e)^1/2
};

/// Errors of a discrete state against exact fields at state.t, by the
/// degree-5 volume rule on every cell.
inline ErrorReport error_norms(const Spaces& s, const BiotState& st, const ExactSolution& exact, const ModelParams& p) {
  const auto& rule = detail::volume_rule();
  const auto tu = tabulate(ElementKind{s.u.kind.order, 1}, rule);
  const auto tt = tabulate(s.pt.kind, rule);
  const auto tp = tabulate(s.pp.kind, rule);
  double e_pt = 0.0, e_pp = 0.0, e_u = 0.0, e_gu = 0.0, e_gp = 0.0, e_eps = 0.0;
  std::vector<Vec2> gu, gp;
  for (int c = 0; c < s.mesh.num_cells(); ++c) {
    const auto g = cell_geometry(s.mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = g.map(rule.points[q]);
      const double w = rule.weights[q] * std::abs(g.det);
      detail::physical_gradients(g, tu.at[q], gu);
      detail::physical_gradients(g, tp.at[q], gp);
      Vec2 uh{0.0, 0.0};
      std::array<Vec2, 2> duh{};
      for (int a = 0; a < tu.num_basis; ++a) {
        for (int comp = 0; comp < 2; ++comp) {
          const double coef = st.u[s.u.global(c, a, comp)];
          uh[comp] += coef * tu.at[q].values[a];
          duh[comp][0] += coef * gu[a][0];
          duh[comp][1] += coef * gu[a][1];
        }
      }
      double pth = 0.0;
      for (int a = 0; a < tt.num_basis; ++a) pth += st.pt[s.pt.global(c, a)] * tt.at[q].values[a];
      double pph = 0.0;
      Vec2 dpph{0.0, 0.0};
      for (int a = 0; a < tp.num_basis; ++a) {
        const double coef = st.pp[s.pp.global(c, a)];
        pph += coef * tp.at[q].values[a];
        dpph[0] += coef * gp[a][0];
        dpph[1] += coef * gp[a][1];
      }
      const Vec2 ue = exact.u(x, st.t);
      const auto due = exact.grad_u(x, st.t);
      const Vec2 dpe = exact.grad_pp(x, st.t);
      const double d_pt = exact.pt(x, st.t) - pth;
      const double d_pp = exact.pp(x, st.t) - pph;
      e_pt += w * d_pt * d_pt;
      e_pp += w * d_pp * d_pp;
      for (int comp = 0; comp < 2; ++comp) {
        const double du = ue[comp] - uh[comp];
        e_u += w * du * du;
        for (int k = 0; k < 2; ++k) {
          const double dg = due[comp][k] - duh[comp][k];
          e_gu += w * dg * dg;
        }
      }
      const double exx = due[0][0] - duh[0][0], eyy = due[1][1] - duh[1][1];
      const double exy = 0.5 * (due[0][1] - duh[0][1] + due[1][0] - duh[1][0]);
      e_eps += w * (exx * exx + eyy * eyy + 2.0 * exy * exy);
      for (int k = 0; k < 2; ++k) e_gp += w * (dpe[k] - dpph[k]) * (dpe[k] - dpph[k]);
    }
  }
  return {std::sqrt(e_pt), std::sqrt(e_pp), std::sqrt(e_u + e_gu), std::sqrt(p.kappa * e_gp),
          std::sqrt(2.0 * p.mu * e_eps), std::sqrt(e_pt / (2.0 * p.mu))};
}

/// Observed order between consecutive meshes: log(e_i / e_{i+1}) / log(N_{i+1} / N_i).
inline double observed_rate(double e_coarse, double e_fine, int n_coarse, int n_fine) {
  return std::log(e_coarse / e_fine) / std::log(static_cast<double>(n_fine) / n_coarse);
}

/// ||u||_V^2 + s_h(p_t, p_t) + ||p_t + alpha p_p||^2_{0,1/lambda} + ||p_p||^2_{0,s0}
inline double discrete_energy(const UnitForms& f, const ModelParams& p, const BiotState& st) {
  double e = p.mu * f.elasticity.bilinear(st.u, st.u);
  if (f.stab.rows > 0) e += p.stab_scale() * f.stab.bilinear(st.pt, st.pt);
  if (p.lambda_inv != 0.0) {
    const double tt = f.mass_pt.bilinear(st.pt, st.pt);
    const double tp = f.mass_cross.bilinear(st.pt, st.pp);
    const double pp = f.mass_pp.bilinear(st.pp, st.pp);
    e += p.lambda_inv * (tt + 2.0 * p.alpha * tp + p.alpha * p.alpha * pp);
  }
  e += p.s0 * f.mass_pp.bilinear(st.pp, st.pp);
  return e;
}

struct EnergyReport {
  std::vector<double> energy;      // X_n^2, n = 0..steps
  double max_rel_increase = 0.0;   // max_n (X_{n+1}^2 - X_n^2) / X_n^2, clipped below at 0
  double final_ratio = 1.0;        // X_steps / X_0
  double initial_residual = 0.0;   // algebraic residual of the initial data
};

/// Random smooth p_p(0) = sum a_jk sin(j pi x) sin(k pi y), j, k = 1..modes.
struct RandomPressure {
  int modes = 4;
  std::vector<double> coef;

  RandomPressure(std::uint64_t seed, int m) : modes(m) {
    SplitMix64 rng(seed);
    coef = random_vector(static_cast<std::size_t>(m) * m, rng);
  }
  double value(const Point& x) const {
    constexpr double pi = std::numbers::pi;
    double v = 0.0;
    for (int j = 1; j <= modes; ++j) {
      for (int k = 1; k <= modes; ++k) v += coef[(j - 1) * modes + k - 1] * std::sin(j * pi * x.x) * std::sin(k * pi * x.y);
    }
    return v;
  }
  Vec2 gradient(const Point& x) const {
    constexpr double pi = std::numbers::pi;
    Vec2 g{0.0, 0.0};
    for (int j = 1; j <= modes; ++j) {
      for (int k = 1; k <= modes; ++k) {
        const double a = coef[(j - 1) * modes + k - 1];
        g[0] += a * j * pi * std::cos(j * pi * x.x) * std::sin(k * pi * x.y);
        g[1] += a * k * pi * std::sin(j * pi * x.x) * std::cos(k * pi * x.y);
      }
    }
    return g;
  }
};

/// Backward Euler with zero forcing and homogeneous boundary data from
/// compatible random initial data; records the discrete energy per step.
inline EnergyReport energy_check(const Spaces& s, const ModelParams& p, int steps, std::uint64_t seed,
                                 StepOptions opt = {}) {
  const UnitForms f = assemble_unit_forms(s);
  const RandomPressure field(seed, 4);
  const ProblemData none;
  const auto init = compatible_initial_data(s, f, p, none, nullptr,
                                            [&field](const Point& x, double) { return field.gradient(x); });
  EnergyReport rep;
  rep.initial_residual = init.residual;
  BiotState st = init.state;
  rep.energy.push_back(discrete_energy(f, p, st));
  if (steps > 0) {
    const TimeStepper stepper(s, f, p, none, opt);
    run_steps(stepper, st, steps, [&](const BiotState& x) { rep.energy.push_back(discrete_energy(f, p, x)); });
  }
  for (std::size_t n = 1; n < rep.energy.size(); ++n) {
    const double prev = rep.energy[n - 1];
    if (prev > 0.0) rep.max_rel_increase = std::max(rep.max_rel_increase, (rep.energy[n] - prev) / prev);
  }
  if (rep.energy.front() > 0.0) rep.final_ratio = std::sqrt(rep.energy.back() / rep.energy.front());
  return rep;
}

inline SparseMatrix block_diagonal(const std::array<SparseMatrix, 3>& blocks) {
  int n = 0;
  for (const auto& b : blocks) n += b.rows;
  MatrixBuilder mb(n, n);
  int off = 0;
  for (const auto& b : blocks) {
    mb.add_block(b, off, off);
    off += b.rows;
  }
  return mb.build();
}

struct InfSupResult {
  double beta = 0.0;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // Ritz residual of the extreme pair, relative
};

/// min |theta| over A x = theta P x (A symmetric nonsingular, P SPD), i.e.
/// the inf-sup constant of A in the P-norm. Lanczos with full
/// reorthogonalization on A^{-1} P, which is self-adjoint in the P inner
/// product; its extreme eigenvalue is 1 / min |theta|.
inline InfSupResult infsup_from_matrices(const SparseMatrix& a, const SparseMatrix& pm, int maxit = 300,
                                         double tol = 1e-10, std::uint64_t seed = 7) {
  const int n = a.rows;
  if (pm.rows != n || a.cols != n || pm.cols != n) throw std::invalid_argument("infsup: size mismatch");
  DirectSolver solver(a, 1e-6);
  SplitMix64 rng(seed);
  std::vector<std::vector<double>> qs, pqs;
  std::vector<double> alphas, betas;
  auto q = random_vector(n, rng);
  auto pq = pm * std::span<const double>(q);
  double nq = std::sqrt(dot(q, pq));
  for (int i = 0; i < n; ++i) {
    q[i] /= nq;
    pq[i] /= nq;
  }
  InfSupResult res;
  const int kmax = std::min(maxit, n);
  for (int k = 0; k < kmax; ++k) {
    qs.push_back(q);
    pqs.push_back(pq);
    auto w = solver.solve(pq);
    // Two passes of Gram-Schmidt in the P inner product.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < qs.size(); ++j) {
        const double h = dot(w, pqs[j]);
        if (pass == 0 && j + 1 == qs.size()) alphas.push_back(h);
        if (pass == 1 && j + 1 == qs.size()) alphas.back() += h;
        for (int i = 0; i < n; ++i) w[i] -= h * qs[j][i];
      }
    }
    auto pw = pm * std::span<const double>(w);
    const double beta = std::sqrt(std::max(dot(w, pw), 0.0));

    const int m = static_cast<int>(alphas.size());
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alphas.data(), m);
    Eigen::VectorXd sub(std::max(m - 1, 0));
    for (int i = 0; i + 1 < m; ++i) sub[i] = betas[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    int best = 0;
    for (int i = 1; i < m; ++i) {
      if (std::abs(eig.eigenvalues()[i]) > std::abs(eig.eigenvalues()[best])) best = i;
    }
    const double theta = eig.eigenvalues()[best];
    const double r = std::abs(beta * eig.eigenvectors()(m - 1, best));
    res.iterations = m;
    res.beta = 1.0 / std::abs(theta);
    res.residual = r / std::abs(theta);
    if (res.residual <= tol || beta <= 1e-14 * std::abs(theta)) {
      res.converged = true;
      return res;
    }
    betas.push_back(beta);
    for (int i = 0; i < n; ++i) {
      q[i] = w[i] / beta;
      pq[i] = pw[i] / beta;
    }
  }
  res.converged = res.iterations == n;  // full space explored
  return res;
}

/// Inf-sup constant of the static operator in the block norm of the
/// preconditioner (Dirichlet-eliminated).
inline InfSupResult infsup_estimate(const Spaces& s, const ModelParams& p, int maxit = 300, double tol = 1e-10) {
  p.validate();
  if (p.s0 + p.alpha * p.alpha * p.lambda_inv == 0.0 && s.constrained()[2].empty()) {
    throw SingularBlockError(
        "pore pressure norm block is singular: s0 = 0, lambda^-1 = 0 and no pressure Dirichlet boundary");
  }
  const UnitForms f = assemble_unit_forms(s);
  const auto op = build_static_operator(s, f, static_coefficients(p));
  const SparseMatrix pm = block_diagonal(norm_blocks(s, f, p));
  return infsup_from_matrices(op.matrix(), pm, maxit, tol);
}

}  // namespace biot
