#pragma once

/// \file model.hpp
/// \brief Discretizations of the three-field system, their finite element
/// spaces, the static step operator and its block-diagonal preconditioner.

#include <array>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biot/fem.hpp"
#include "biot/forms.hpp"
#include "biot/mesh.hpp"
#include "biot/sparse.hpp"
#include "biot/sparse_solve.hpp"

namespace biot {

enum class Discretization { kTaylorHood, kBrezziPitkaranta, kP1P0 };

inline constexpr std::array<Discretization, 3> kAllDiscretizations{
    Discretization::kTaylorHood, Discretization::kBrezziPitkaranta, Discretization::kP1P0};

inline std::string to_string(Discretization d) {
  switch (d) {
    case Discretization::kTaylorHood: return "taylor-hood";
    case Discretization::kBrezziPitkaranta: return "brezzi-pitkaranta";
    case Discretization::kP1P0: return "p1-p0";
  }
  return "?";
}

inline Discretization parse_discretization(std::string_view s) {
  if (s == "taylor-hood" || s == "th") return Discretization::kTaylorHood;
  if (s == "brezzi-pitkaranta" || s == "bp") return Discretization::kBrezziPitkaranta;
  if (s == "p1-p0") return Discretization::kP1P0;
  throw std::invalid_argument("unknown method '" + std::string(s) +
                              "' (expected taylor-hood, brezzi-pitkaranta or p1-p0)");
}

inline bool is_stabilized(Discretization d) { return d != Discretization::kTaylorHood; }

/// Element kinds for (u, p_t, p_p).
inline std::array<ElementKind, 3> element_kinds(Discretization d) {
  switch (d) {
    case Discretization::kTaylorHood: return {ElementKind::P2(2), ElementKind::P1(), ElementKind::P1()};
    case Discretization::kBrezziPitkaranta: return {ElementKind::P1(2), ElementKind::P1(), ElementKind::P1()};
    case Discretization::kP1P0: return {ElementKind::P1(2), ElementKind::P0(), ElementKind::P1()};
  }
  throw std::invalid_argument("element_kinds: bad discretization");
}

/// Mesh, boundary tags and the three dof maps of one discretization.
struct Spaces {
  Discretization disc = Discretization::kTaylorHood;
  Mesh mesh;
  EdgeTopology topo;
  BoundarySpec boundary;
  BoundaryTags tags;
  DofMap u, pt, pp;

  const DofMap& map(int block) const { return block == 0 ? u : (block == 1 ? pt : pp); }
  std::array<int, 3> sizes() const { return {u.size(), pt.size(), pp.size()}; }
  int total_size() const { return u.size() + pt.size() + pp.size(); }

  /// Block-local constrained dofs: u on Gamma_d, p_p on Gamma_p, none for p_t.
  std::array<std::vector<int>, 3> constrained() const {
    return {dirichlet_set(u, topo, tags, Partition::kDisplacement, nullptr, 0.0).dofs, {},
            dirichlet_set(pp, topo, tags, Partition::kPressure, nullptr, 0.0).dofs};
  }
};

inline Spaces make_spaces(int N, Discretization disc, const BoundarySpec& boundary = {}) {
  Spaces s;
  s.disc = disc;
  s.mesh = unit_square_mesh(N);
  s.topo = build_edges(s.mesh);
  s.boundary = boundary;
  s.tags = tag_boundary(s.mesh, s.topo, boundary);
  const auto kinds = element_kinds(disc);
  s.u = build_dofmap(s.mesh, s.topo, kinds[0]);
  s.pt = build_dofmap(s.mesh, s.topo, kinds[1]);
  s.pp = build_dofmap(s.mesh, s.topo, kinds[2]);
  return s;
}

/// Parameter-free building blocks. Every term of the static operator is a
/// scalar multiple of one of these.
struct UnitForms {
  SparseMatrix elasticity;  // (2 eps(u), eps(v))
  SparseMatrix div;         // (q_t, div v), p_t rows
  SparseMatrix mass_pt;     // (p_t, q_t)
  SparseMatrix mass_cross;  // (p_p, q_t), p_t rows
  SparseMatrix mass_pp;     // (p_p, q_p)
  SparseMatrix lap_pp;      // (grad p_p, grad q_p)
  SparseMatrix stab;        // s_h with gamma2 / (2 mu) = 1; empty for Taylor-Hood
};

/// `jump_h_power` is the edge-length exponent of the P1-P0 jump term.
inline UnitForms assemble_unit_forms(const Spaces& s, double jump_h_power = 1.0) {
  UnitForms f;
  ModelParams unit;
  unit.mu = 1.0;
  f.elasticity = assemble_elasticity(s.mesh, s.u, unit);
  f.div = assemble_div_coupling(s.mesh, s.u, s.pt);
  f.mass_pt = assemble_weighted_mass(s.mesh, s.pt, s.pt, 1.0);
  f.mass_cross = assemble_weighted_mass(s.mesh, s.pt, s.pp, 1.0);
  f.mass_pp = assemble_weighted_mass(s.mesh, s.pp, s.pp, 1.0);
  f.lap_pp = assemble_laplacian(s.mesh, s.pp, 1.0);
  ModelParams half;
  half.mu = 0.5;
  half.gamma2 = 1.0;
  if (s.disc == Discretization::kBrezziPitkaranta) f.stab = assemble_stab_gradgrad(s.mesh, s.pt, half);
  if (s.disc == Discretization::kP1P0) f.stab = assemble_stab_jump(s.mesh, s.topo, s.pt, half, jump_h_power);
  return f;
}

/// Coefficients of
///   [[ e A,  B^T,        0       ],
///    [ B,   -s S - m M, -c M_x   ],
///    [ 0,   -c M_x^T,   -w M - k K ]].
struct OperatorCoefficients {
  double elastic = 1.0;
  double stab = 0.0;
  double pt_mass = 0.0;
  double cross = 0.0;
  double pp_mass = 0.0;
  double pp_stiff = 0.0;
};

/// Static step of backward Euler (kappa enters as kappa * dt).
inline OperatorCoefficients static_coefficients(const ModelParams& p) {
  return {p.mu, p.stab_scale(), p.lambda_inv, p.alpha * p.lambda_inv,
          p.s0 + p.alpha * p.alpha * p.lambda_inv, p.kappa_dt()};
}

/// Full (unconstrained) block operator. Off-diagonal blocks are placed as
/// exact transposes of each other, so the result is exactly symmetric.
inline SparseMatrix assemble_block_operator(const Spaces& s, const UnitForms& f, const OperatorCoefficients& c) {
  const auto n = s.sizes();
  const int o1 = n[0], o2 = n[0] + n[1];
  MatrixBuilder b(s.total_size(), s.total_size());
  b.add_block(f.elasticity, 0, 0, c.elastic);
  const SparseMatrix div_t = f.div.transpose();
  b.add_block(div_t, 0, o1);
  b.add_block(f.div, o1, 0);
  if (f.stab.rows > 0 && c.stab != 0.0) b.add_block(f.stab, o1, o1, -c.stab);
  b.add_block(f.mass_pt, o1, o1, -c.pt_mass);
  const SparseMatrix cross_t = f.mass_cross.transpose();
  b.add_block(f.mass_cross, o1, o2, -c.cross);
  b.add_block(cross_t, o2, o1, -c.cross);
  b.add_block(f.mass_pp, o2, o2, -c.pp_mass);
  b.add_block(f.lap_pp, o2, o2, -c.pp_stiff);
  return b.build();
}

/// Static operator with its Dirichlet elimination. The constrained set is
/// fixed by the spaces; only its values change in time.
struct StaticOperator {
  std::array<int, 3> full_sizes{};
  std::array<int, 3> free_sizes{};
  SparseMatrix full;
  DirichletReduction reduction;

  const SparseMatrix& matrix() const { return reduction.reduced(); }
};

inline std::vector<int> monolithic_constrained(const Spaces& s) {
  const auto con = s.constrained();
  const auto n = s.sizes();
  std::vector<int> all = con[0];
  for (int d : con[2]) all.push_back(n[0] + n[1] + d);
  return all;
}

inline StaticOperator build_static_operator(const Spaces& s, const UnitForms& f, const OperatorCoefficients& c) {
  StaticOperator op;
  op.full_sizes = s.sizes();
  op.full = assemble_block_operator(s, f, c);
  op.reduction = DirichletReduction(op.full, monolithic_constrained(s));
  const auto con = s.constrained();
  for (int b = 0; b < 3; ++b) op.free_sizes[b] = op.full_sizes[b] - static_cast<int>(con[b].size());
  return op;
}

/// The Dirichlet-eliminated static system with a zero right-hand side.
inline BlockSystem build_static_system(const Spaces& s, const ModelParams& params) {
  params.validate();
  const auto op = build_static_operator(s, assemble_unit_forms(s), static_coefficients(params));
  BlockSystem sys;
  sys.matrix = op.matrix();
  sys.rhs.assign(sys.matrix.rows, 0.0);
  sys.block_sizes = op.free_sizes;
  return sys;
}

/// Keeps the free rows/columns of one block.
inline SparseMatrix reduce_block(const SparseMatrix& m, const std::vector<int>& constrained) {
  std::vector<int> keep(m.rows, 0);
  for (int d : constrained) keep[d] = -1;
  int k = 0;
  for (int& v : keep) v = (v < 0) ? -1 : k++;
  return extract(m, keep, k, keep, k);
}

/// Riesz maps of the parameter-dependent norms, on free dofs:
///   (2 mu eps(u), eps(v)),
///   ((2 mu)^-1 p_t, q_t) [+ s_h(p_t, q_t) for the stabilized methods],
///   ((s0 + alpha^2 / lambda) p_p, q_p) + (kappa dt grad p_p, grad q_p).
inline std::array<SparseMatrix, 3> norm_blocks(const Spaces& s, const UnitForms& f, const ModelParams& p) {
  const auto con = s.constrained();
  std::array<SparseMatrix, 3> out;
  out[0] = reduce_block(f.elasticity, con[0]).scaled(p.mu);
  if (f.stab.rows > 0) {
    out[1] = combine({{1.0 / (2.0 * p.mu), &f.mass_pt}, {p.stab_scale(), &f.stab}});
  } else {
    out[1] = f.mass_pt.scaled(1.0 / (2.0 * p.mu));
  }
  const double w = p.s0 + p.alpha * p.alpha * p.lambda_inv;
  out[2] = reduce_block(combine({{w, &f.mass_pp}, {p.kappa_dt(), &f.lap_pp}}), con[2]);
  return out;
}

/// Builds block preconditioners for one set of spaces, reusing Cholesky
/// factors across parameter values that only rescale a block: the u block
/// is mu * A, the stabilized p_t block is (2 mu)^-1 (M + gamma2 S) and the
/// p_p block is k (w/k M + K).
class PreconditionerFactory {
 public:
  PreconditionerFactory(const Spaces& s, const UnitForms& f, InnerChoice pt_inner = InnerChoice::kJacobi)
      : forms_(&f), pt_inner_(pt_inner), constrained_(s.constrained()) {}

  InnerChoice pt_inner() const { return pt_inner_; }

  BlockPreconditioner make(const ModelParams& p) {
    p.validate();
    const double w = p.s0 + p.alpha * p.alpha * p.lambda_inv;
    if (w == 0.0 && constrained_[2].empty()) {
      throw SingularBlockError(
          "pore pressure preconditioner block is singular: s0 = 0, lambda^-1 = 0 and no pressure Dirichlet "
          "boundary leave constants in its kernel");
    }
    std::array<InnerSolver, 3> inner;
    try {
      if (!u_factor_) {
        u_factor_ = std::make_shared<const CholeskyFactor>(reduce_block(forms_->elasticity, constrained_[0]));
      }
      inner[0] = ScaledCholesky{u_factor_, p.mu};
    } catch (const NotPositiveDefinite& e) {
      throw SingularBlockError(std::string("displacement preconditioner block is singular: ") + e.what());
    }

    const double pt_scale = 1.0 / (2.0 * p.mu);
    if (forms_->stab.rows > 0) {
      auto& fac = pt_factors_[p.gamma2];
      if (!fac) fac = std::make_shared<const CholeskyFactor>(combine({{1.0, &forms_->mass_pt}, {p.gamma2, &forms_->stab}}));
      inner[1] = ScaledCholesky{fac, pt_scale};
    } else if (pt_inner_ == InnerChoice::kJacobi) {
      inner[1] = JacobiSolver(forms_->mass_pt.scaled(pt_scale));
    } else {
      if (!pt_mass_factor_) pt_mass_factor_ = std::make_shared<const CholeskyFactor>(forms_->mass_pt);
      inner[1] = ScaledCholesky{pt_mass_factor_, pt_scale};
    }

    const double k = p.kappa_dt();
    const double ratio = w / k;
    try {
      auto& fac = pp_factors_[ratio];
      if (!fac) {
        fac = std::make_shared<const CholeskyFactor>(
            reduce_block(combine({{ratio, &forms_->mass_pp}, {1.0, &forms_->lap_pp}}), constrained_[2]));
      }
      inner[2] = ScaledCholesky{fac, k};
    } catch (const NotPositiveDefinite& e) {
      throw SingularBlockError(std::string("pore pressure preconditioner block is singular: ") + e.what());
    }
    return BlockPreconditioner(std::move(inner));
  }

 private:
  const UnitForms* forms_;
  InnerChoice pt_inner_;
  std::array<std::vector<int>, 3> constrained_;
  std::shared_ptr<const CholeskyFactor> u_factor_;
  std::shared_ptr<const CholeskyFactor> pt_mass_factor_;
  std::map<double, std::shared_ptr<const CholeskyFactor>> pt_factors_;
  std::map<double, std::shared_ptr<const CholeskyFactor>> pp_factors_;
};

}  // namespace biot
