// Acceptance criteria. Usage: acceptance <1..6>. Prints one PASS/FAIL line
// and exits nonzero on FAIL.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <string>

#include "biot/experiments.hpp"

using namespace biot;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fx(double v, int digits = 2) { return format_fixed(v, digits); }

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) d(i, a.col_idx[k]) += a.values[k];
  }
  return d;
}

SparseMatrix sparse(const Eigen::MatrixXd& d) {
  MatrixBuilder b(static_cast<int>(d.rows()), static_cast<int>(d.cols()));
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) {
      if (d(i, j) != 0.0) b.add(i, j, d(i, j));
    }
  }
  return b.build();
}

ExperimentConfig config(const std::string& sub) {
  ExperimentConfig c;
  c.subcommand = sub;
  c.quiet = true;
  c.timing = false;
  c.methods.assign(kAllDiscretizations.begin(), kAllDiscretizations.end());
  return c;
}

// Taylor-Hood manufactured convergence against reference errors.
Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = config("converge");
  c.methods = {Discretization::kTaylorHood};
  const auto rows = run_converge(c);
  const double secs = elapsed(t0);
  // Reference errors for N = 8, 16, 32, 64 in the norms
  // ((2 mu)^-1 e, e)^1/2, L2, (2 mu eps(e), eps(e))^1/2, (kappa grad e, grad e)^1/2.
  const double ref[4][4] = {{4.342e-02, 3.527e-03, 5.725e-02, 1.127e-01},
                            {1.071e-02, 8.826e-04, 1.424e-02, 5.642e-02},
                            {2.669e-03, 2.207e-04, 3.559e-03, 2.822e-02},
                            {6.668e-04, 5.519e-05, 8.897e-04, 1.411e-02}};
  const char* names[4] = {"pt", "pp", "u", "ppk"};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    const auto& e = rows[i].errors;
    const double got[4] = {e.pt_weighted, e.pp_l2, e.u_energy, e.pp_h1_kappa};
    for (int k = 0; k < 4; ++k) {
      const double dev = std::abs(got[k] / ref[i][k] - 1.0);
      worst = std::max(worst, dev);
      v.require(dev <= 0.25, std::string(names[k]) + " N=" + std::to_string(rows[i].n) + " " + format_sci(got[k]));
    }
  }
  const ConvergenceRates r = convergence_rates(rows[2], rows[3]);
  const double target[4] = {2.0, 2.0, 2.0, 1.0};
  const double got[4] = {r.pt, r.pp, r.u, r.pp_kappa};
  for (int k = 0; k < 4; ++k) v.require(std::abs(got[k] - target[k]) <= 0.15, std::string(names[k]) + " rate");
  v.require(secs <= 600.0, "runtime");
  v.detail << "rates at N=64 pt " << fx(r.pt) << " pp " << fx(r.pp) << " u " << fx(r.u) << " ppk " << fx(r.pp_kappa)
           << "; u error at N=64 " << format_sci(rows[3].errors.u_energy) << "; max relative error deviation "
           << fx(100.0 * worst, 1) << "%; " << fx(secs, 0) << " s";
  return v;
}

// Stabilized rate trends at N = 128.
Verdict criterion2() {
  Verdict v;
  ExperimentConfig c = config("converge");
  c.allow_large = true;
  c.meshes = {64, 128};

  c.methods = {Discretization::kBrezziPitkaranta};
  c.gamma2 = 40.0;
  const auto bp = run_converge(c);
  const auto rb = convergence_rates(bp[0], bp[1]);
  v.require(rb.u >= 1.6, "BP u rate");
  v.require(rb.pp >= 1.7, "BP pp rate");

  c.methods = {Discretization::kP1P0};
  c.gamma2 = 1.0;
  const auto p0 = run_converge(c);
  const auto rp = convergence_rates(p0[0], p0[1]);
  v.require(std::abs(rp.u - 1.0) <= 0.2, "P1-P0 u rate");
  v.require(std::abs(rp.pp - 2.0) <= 0.2, "P1-P0 pp rate");

  c.methods = {Discretization::kBrezziPitkaranta};
  const auto bp1 = run_converge(c);
  const auto rb1 = convergence_rates(bp1[0], bp1[1]);

  v.detail << "BP (gamma2=40) u " << fx(rb.u) << " pp " << fx(rb.pp) << "; P1-P0 (gamma2=1) u " << fx(rp.u) << " pp "
           << fx(rp.pp) << "; info: BP with gamma2=1 gives u " << fx(rb1.u) << " pp " << fx(rb1.pp);
  return v;
}

// Iteration robustness over the full parameter grid.
Verdict criterion3() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = config("precond");
  std::ostringstream per;
  for (Discretization m : kAllDiscretizations) {
    c.methods = {m};
    const auto cells = run_precond(c);
    bool ok = true;
    for (const auto& cell : cells) ok = ok && cell.converged && cell.iterations <= 80;
    const auto spread = iteration_spread(cells);
    v.require(ok, to_string(m) + " iteration cap");
    v.require(spread.ratio() <= 4.0, to_string(m) + " max/min");
    per << to_string(m) << " " << spread.min << ".." << spread.max << " (" << fx(spread.ratio()) << "); ";
  }
  const double secs = elapsed(t0);
  v.require(secs <= 900.0, "runtime");
  v.detail << per.str() << fx(secs, 0) << " s";
  return v;
}

// Energy is non-increasing over 100 steps without forcing.
Verdict criterion4() {
  Verdict v;
  ExperimentConfig c = config("energy");
  c.mu = {1.0};
  c.lambda_ratio = {1.0};
  c.kappa = {1.0};
  c.steps = 100;
  c.dt = 1e-3;  // final time 0.1
  for (const auto& run : run_energy(c)) {
    const auto& rep = run.report;
    v.require(rep.energy.size() == 101u, to_string(run.method) + " step count");
    v.require(rep.max_rel_increase <= 1e-12, to_string(run.method) + " increase");
    v.detail << to_string(run.method) << " max increase " << format_sci(rep.max_rel_increase, 1) << " decay "
             << format_sci(rep.final_ratio, 2) << "; ";
  }
  return v;
}

// Inf-sup constant: mesh uniformity, dense oracle, parameter spread.
Verdict criterion5() {
  Verdict v;
  ModelParams unit;
  double lo = 1e300, hi = 0.0;
  for (int n : {4, 8, 16}) {
    const InfSupResult r = infsup_estimate(make_spaces(n, Discretization::kTaylorHood), unit, 400, 1e-12);
    v.require(r.converged, "Lanczos N=" + std::to_string(n));
    lo = std::min(lo, r.beta);
    hi = std::max(hi, r.beta);
    v.detail << "N=" << n << " " << format_sci(r.beta, 4) << "; ";
  }
  v.require((hi - lo) / hi < 0.10, "mesh variation");

  const Spaces s4 = make_spaces(4, Discretization::kTaylorHood);
  const UnitForms f = assemble_unit_forms(s4);
  const auto op = build_static_operator(s4, f, static_coefficients(unit));
  const SparseMatrix pm = block_diagonal(norm_blocks(s4, f, unit));
  const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(dense(op.matrix()), dense(pm));
  const double oracle = ges.eigenvalues().cwiseAbs().minCoeff();
  const double lanczos = infsup_estimate(s4, unit, 400, 1e-12).beta;
  const double rel = std::abs(lanczos - oracle) / oracle;
  v.require(rel <= 1e-6, "dense oracle");

  ExperimentConfig c = config("infsup");
  c.methods = {Discretization::kTaylorHood};
  c.meshes = {8};
  c.maxit = 400;
  double glo = 1e300, ghi = 0.0;
  for (const auto& cell : run_infsup(c)) {
    v.require(cell.result.converged, "grid cell Lanczos");
    glo = std::min(glo, cell.result.beta);
    ghi = std::max(ghi, cell.result.beta);
  }
  v.require(ghi / glo <= 4.0, "grid max/min");
  v.detail << "variation " << fx(100.0 * (hi - lo) / hi, 1) << "%; oracle rel diff " << format_sci(rel, 1)
           << "; grid max/min " << fx(ghi / glo);
  return v;
}

// Element matrices, Cholesky, MinRes and operator symmetry.
Verdict criterion6() {
  Verdict v;
  Mesh ref;
  ref.N = 1;
  ref.vertices = {{0, 0}, {1, 0}, {0, 1}};
  ref.triangles = {{0, 1, 2}};
  const EdgeTopology topo = build_edges(ref);
  const DofMap p0 = build_dofmap(ref, topo, ElementKind::P0());
  const DofMap p1 = build_dofmap(ref, topo, ElementKind::P1());
  const DofMap p2 = build_dofmap(ref, topo, ElementKind::P2());
  double err = 0.0;
  const SparseMatrix k1 = assemble_laplacian(ref, p1, 1.0);
  const SparseMatrix m1 = assemble_weighted_mass(ref, p1, p1, 1.0);
  const double stiff[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      err = std::max(err, std::abs(k1.at(i, j) - stiff[i][j]));
      err = std::max(err, std::abs(m1.at(i, j) - (i == j ? 2.0 : 1.0) / 24.0));
    }
  }
  err = std::max(err, std::abs(assemble_weighted_mass(ref, p0, p0, 1.0).at(0, 0) - 0.5));
  const SparseMatrix m2 = assemble_weighted_mass(ref, p2, p2, 1.0);
  const auto dofs = p2.cell(0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      double e;
      if (i < 3 && j < 3) e = i == j ? 6.0 : -1.0;
      else if (i >= 3 && j >= 3) e = i == j ? 32.0 : 16.0;
      else e = ((i < 3 ? i : j) == (i < 3 ? j : i) - 3) ? -4.0 : 0.0;
      err = std::max(err, std::abs(m2.at(dofs[i], dofs[j]) - e / 360.0));
    }
  }
  v.require(err <= 1e-12, "element matrices");

  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 30;
    const Eigen::MatrixXd g = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return unif(gen); });
    const Eigen::MatrixXd spd = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    const SparseMatrix a = sparse(spd);
    std::vector<double> b(n);
    for (double& x : b) x = unif(gen);
    const auto x = CholeskyFactor(a).solve(b);
    const auto ax = a * x;
    double r = 0.0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(ax[i] - b[i]));
    worst = std::max(worst, r / (1.0 + norm2(b)));
  }
  v.require(worst <= 1e-10, "Cholesky residual");

  MatrixBuilder d(2, 2);
  d.add(0, 0, 1.0);
  d.add(1, 1, -1.0);
  const SparseMatrix dm = d.build();
  const LinearOperator id = [](std::span<const double> r, std::span<double> z) { std::copy(r.begin(), r.end(), z.begin()); };
  const std::vector<double> rhs{1.0, 1.0};
  std::vector<double> x(2, 0.0);
  const SolveReport rep = minres(as_operator(dm), id, rhs, x, {1e-12, 10});
  v.require(rep.converged && rep.iterations <= 2, "MinRes diag(1,-1)");

  double asym = 0.0;
  ModelParams p;
  p.mu = 3.0;
  p.lambda_inv = 0.2;
  p.kappa = 1e-3;
  p.dt = 0.1;
  for (Discretization m : kAllDiscretizations) {
    const Spaces s = make_spaces(6, m);
    const auto op = build_static_operator(s, assemble_unit_forms(s), static_coefficients(p));
    asym = std::max({asym, op.full.max_asymmetry(), op.matrix().max_asymmetry()});
  }
  v.require(asym == 0.0, "operator symmetry");

  v.detail << "element max err " << format_sci(err, 1) << "; Cholesky max rel residual " << format_sci(worst, 1)
           << "; MinRes iterations " << rep.iterations << "; max asymmetry " << format_sci(asym, 1);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: acceptance <1..6>\n");
    return 2;
  }
  const int which = std::atoi(argv[1]);
  const char* titles[] = {"", "Taylor-Hood convergence", "stabilized rate trends", "preconditioner robustness",
                          "energy dissipation", "inf-sup uniformity", "kernel oracles"};
  Verdict (*const run[])() = {nullptr, criterion1, criterion2, criterion3, criterion4, criterion5, criterion6};
  if (which < 1 || which > 6) {
    std::fprintf(stderr, "unknown criterion '%s'\n", argv[1]);
    return 2;
  }
  Verdict v;
  try {
    v = run[which]();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  std::printf("%s criterion %d (%s): %s\n", v.pass ? "PASS" : "FAIL", which, titles[which], v.detail.str().c_str());
  return v.pass ? 0 : 1;
}
