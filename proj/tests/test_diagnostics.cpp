#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "biot/diagnostics.hpp"

using namespace biot;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& a) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) d(i, a.col_idx[k]) += a.values[k];
  }
  return d;
}

SparseMatrix diag(const std::vector<double>& v) {
  MatrixBuilder b(static_cast<int>(v.size()), static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) b.add(static_cast<int>(i), static_cast<int>(i), v[i]);
  return b.build();
}

}  // namespace

TEST(SplitMix64, ReferenceSequence) {
  SplitMix64 rng(1234567);
  EXPECT_EQ(rng.next(), 6457827717110365317ULL);
  EXPECT_EQ(rng.next(), 3203168211198807973ULL);
  SplitMix64 a(42), b(42);
  const auto va = random_vector(100, a);
  EXPECT_EQ(va, random_vector(100, b));
  for (double v : va) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(ObservedRate, Halving) {
  EXPECT_DOUBLE_EQ(observed_rate(1.0, 0.25, 8, 16), 2.0);
  EXPECT_NEAR(observed_rate(1.0, 0.5, 16, 64), 0.5, 1e-15);
}

TEST(ErrorNorms, ZeroStateGivesExactNorms) {
  const ModelParams p = manufactured_params();
  const ManufacturedProblem m = manufactured_problem(p);
  const Spaces s = make_spaces(16, Discretization::kTaylorHood);
  const ErrorReport e = error_norms(s, zero_state(s), m.exact, p);
  const double pi = std::numbers::pi, s1 = std::sin(1.0);
  // x^4 y^4 exceeds the degree of the volume rule: quadrature error ~1e-10 at N = 16.
  EXPECT_NEAR(e.pp_l2, 0.2, 1e-9);
  EXPECT_NEAR(e.pp_h1_kappa, std::sqrt(8.0 / 15.0), 1e-9);
  EXPECT_NEAR(e.u_h1, std::sqrt((1.0 + pi * pi) * s1 * s1 / 2.0), 1e-6);
  EXPECT_NEAR(e.u_energy, std::sqrt(2.0 * p.mu * pi * pi * s1 * s1 / 2.0), 1e-6);
  EXPECT_NEAR(e.pt_weighted, e.pt_l2 / std::sqrt(2.0 * p.mu), 1e-12);
  // p_t(x, 0) = 15 pi cos(pi x) sin 1 - x^2 y^2
  const double a = 15.0 * pi * s1;
  EXPECT_NEAR(e.pt_l2 * e.pt_l2, a * a / 2.0 + 1.0 / 25.0 - 2.0 * a * (-2.0 / (pi * pi)) / 3.0, 1e-5);
}

TEST(ErrorNorms, InterpolationRates) {
  const ModelParams p = manufactured_params();
  const ManufacturedProblem m = manufactured_problem(p);
  std::array<ErrorReport, 2> e;
  const std::array<int, 2> ns{8, 16};
  for (int k = 0; k < 2; ++k) {
    const Spaces s = make_spaces(ns[k], Discretization::kTaylorHood);
    BiotState st;
    st.t = 0.4;
    st.u = interpolate(s.u, [&](const Point& x, double t, int c) { return m.exact.u(x, t)[c]; }, st.t);
    st.pt = interpolate(s.pt, [&](const Point& x, double t, int) { return m.exact.pt(x, t); }, st.t);
    st.pp = interpolate(s.pp, [&](const Point& x, double t, int) { return m.exact.pp(x, t); }, st.t);
    e[k] = error_norms(s, st, m.exact, p);
  }
  EXPECT_NEAR(observed_rate(e[0].u_h1, e[1].u_h1, 8, 16), 2.0, 0.1);
  EXPECT_NEAR(observed_rate(e[0].u_energy, e[1].u_energy, 8, 16), 2.0, 0.1);
  EXPECT_NEAR(observed_rate(e[0].pt_l2, e[1].pt_l2, 8, 16), 2.0, 0.1);
  EXPECT_NEAR(observed_rate(e[0].pp_l2, e[1].pp_l2, 8, 16), 2.0, 0.1);
  EXPECT_NEAR(observed_rate(e[0].pp_h1_kappa, e[1].pp_h1_kappa, 8, 16), 1.0, 0.1);
}

TEST(Energy, DecaysFromRandomCompatibleData) {
  for (auto disc : kAllDiscretizations) {
    const Spaces s = make_spaces(6, disc);
    ModelParams p;
    p.dt = 0.05;
    const EnergyReport r = energy_check(s, p, 20, 42);
    ASSERT_EQ(r.energy.size(), 21u);
    EXPECT_GT(r.energy.front(), 0.0);
    EXPECT_LE(r.max_rel_increase, 1e-12) << to_string(disc);
    EXPECT_LT(r.final_ratio, 1.0);
    EXPECT_LE(r.initial_residual, 1e-9);
    for (double v : r.energy) EXPECT_GE(v, 0.0);
  }
}

TEST(Energy, IsDeterministicInSeed) {
  const Spaces s = make_spaces(4, Discretization::kTaylorHood);
  const ModelParams p;
  EXPECT_EQ(energy_check(s, p, 3, 7).energy, energy_check(s, p, 3, 7).energy);
  EXPECT_NE(energy_check(s, p, 3, 7).energy, energy_check(s, p, 3, 8).energy);
}

TEST(Energy, IncompressibleLimitDropsPressureCoupling) {
  const Spaces s = make_spaces(3, Discretization::kTaylorHood);
  const UnitForms f = assemble_unit_forms(s);
  ModelParams p;
  p.lambda_inv = 0.0;
  p.s0 = 2.0;
  BiotState st = zero_state(s);
  std::fill(st.pp.begin(), st.pp.end(), 1.0);
  std::fill(st.pt.begin(), st.pt.end(), 5.0);
  EXPECT_NEAR(discrete_energy(f, p, st), 2.0, 1e-13);
}

TEST(InfSup, DiagonalOracle) {
  const auto r = infsup_from_matrices(diag({2.0, -0.5, 3.0, -4.0}), SparseMatrix::identity(4));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.beta, 0.5, 1e-12);
  const auto w = infsup_from_matrices(diag({2.0, -0.5}), diag({1.0, 0.25}));
  EXPECT_NEAR(w.beta, 2.0, 1e-12);
}

TEST(InfSup, BlockDiagonal) {
  const SparseMatrix b = block_diagonal({diag({1.0}), diag({2.0, 3.0}), diag({4.0})});
  EXPECT_EQ(b.rows, 4);
  EXPECT_EQ(b.at(2, 2), 3.0);
  EXPECT_EQ(b.at(3, 3), 4.0);
}

// Dense generalized eigenproblem A x = theta P x as the oracle.
class InfSupMethods : public ::testing::TestWithParam<Discretization> {};

TEST_P(InfSupMethods, LanczosMatchesDenseEigenvalues) {
  const Spaces s = make_spaces(4, GetParam());
  for (double mu : {1.0, 1e3}) {
    for (double kappa : {1.0, 1e-6}) {
      ModelParams p;
      p.mu = mu;
      p.kappa = kappa;
      const UnitForms f = assemble_unit_forms(s);
      const auto op = build_static_operator(s, f, static_coefficients(p));
      const SparseMatrix pm = block_diagonal(norm_blocks(s, f, p));
      const Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(dense(op.matrix()), dense(pm));
      const double oracle = ges.eigenvalues().cwiseAbs().minCoeff();
      const InfSupResult r = infsup_estimate(s, p, 400, 1e-12);
      EXPECT_TRUE(r.converged);
      EXPECT_NEAR(r.beta, oracle, 1e-6 * oracle) << "mu " << mu << " kappa " << kappa;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Methods, InfSupMethods, ::testing::ValuesIn(kAllDiscretizations),
                         [](const auto& info) {
                           std::string name = to_string(info.param);
                           std::erase(name, '-');
                           return name;
                         });

TEST(InfSup, SingularNormIsRejected) {
  BoundarySpec spec;
  spec.pressure = {"none", ""};
  const Spaces s = make_spaces(2, Discretization::kTaylorHood, spec);
  ModelParams p;
  p.s0 = 0.0;
  p.lambda_inv = 0.0;
  EXPECT_THROW(infsup_estimate(s, p), SingularBlockError);
}
