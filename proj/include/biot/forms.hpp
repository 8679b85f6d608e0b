#pragma once

/// \file forms.hpp
/// \brief Assembly of the bilinear and linear forms of the three-field Biot
/// system (displacement, total pressure, pore pressure), both pressure
/// stabilizations, boundary loads and symmetric Dirichlet elimination.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "biot/fem.hpp"
#include "biot/mesh.hpp"
#include "biot/sparse.hpp"

namespace biot {

/// Material, stabilization and time-step parameters. lambda is carried as
/// its inverse so that the incompressible limit is lambda_inv = 0.
struct ModelParams {
  double mu = 1.0;
  double lambda_inv = 1.0;
  double alpha = 1.0;
  double s0 = 1.0;
  double kappa = 1.0;
  double gamma2 = 1.0;
  double dt = 1.0;

  double lambda() const {
    return lambda_inv == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / lambda_inv;
  }
  /// Conductivity as it appears in the static step: kappa * dt.
  double kappa_dt() const { return kappa * dt; }
  /// gamma2 / (2 mu)
  double stab_scale() const { return gamma2 / (2.0 * mu); }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("ModelParams: " + m); };
    if (!(mu > 0.0)) fail("mu must be > 0");
    if (!(lambda_inv >= 0.0)) fail("lambda^-1 must be >= 0");
    if (!(s0 >= 0.0)) fail("s0 must be >= 0");
    if (!(kappa > 0.0)) fail("kappa must be > 0");
    if (!(gamma2 > 0.0)) fail("gamma2 must be > 0");
    if (!(dt > 0.0)) fail("dt must be > 0");
    if (!std::isfinite(alpha)) fail("alpha must be finite");
  }
};

using VectorFn = std::function<Vec2(const Point& x, double t)>;
using ScalarFn = std::function<double(const Point& x, double t)>;
/// Boundary traction sigma n given the outward unit normal.
using TractionFn = std::function<Vec2(const Point& x, double t, const Point& normal)>;

namespace detail {

inline const QuadratureRule& volume_rule() {
  static const QuadratureRule rule = quadrature_rule(5);
  return rule;
}

inline void require_scalar(const DofMap& m, const char* what) {
  if (m.kind.components != 1) throw std::invalid_argument(std::string(what) + ": scalar space required");
}

/// Physical gradients of all shape functions at one quadrature point.
inline void physical_gradients(const CellGeometry& g, const BasisEval& b, std::vector<Vec2>& out) {
  out.resize(b.gradients.size());
  for (std::size_t a = 0; a < b.gradients.size(); ++a) out[a] = g.gradient(b.gradients[a]);
}

}  // namespace detail

/// (2 mu eps(u), eps(v)) on a 2-vector P1 or P2 space.
inline SparseMatrix assemble_elasticity(const Mesh& mesh, const DofMap& u_map, const ModelParams& params) {
  if (u_map.kind.components != 2 || u_map.kind.order < 1) {
    throw std::invalid_argument("assemble_elasticity: vector P1 or P2 space required");
  }
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(ElementKind{u_map.kind.order, 1}, rule);
  const int nb = table.num_basis;
  MatrixBuilder builder(u_map.size(), u_map.size());
  std::vector<double> ke(4 * nb * nb);
  std::vector<Vec2> grads;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    std::fill(ke.begin(), ke.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      detail::physical_gradients(g, table.at[q], grads);
      const double w = rule.weights[q] * std::abs(g.det) * params.mu;
      // eps(phi_a e_c) : eps(phi_b e_d) * 2 = delta_cd grad_a . grad_b + d_d phi_a d_c phi_b
      for (int d = 0; d < 2; ++d) {
        for (int b = 0; b < nb; ++b) {
          for (int cc = 0; cc < 2; ++cc) {
            for (int a = 0; a < nb; ++a) {
              double v = grads[a][d] * grads[b][cc];
              if (cc == d) v += grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
              ke[((d * nb + b) * 2 + cc) * nb + a] += w * v;
            }
          }
        }
      }
    }
    for (int d = 0; d < 2; ++d) {
      for (int b = 0; b < nb; ++b) {
        const int row = u_map.global(c, b, d);
        for (int cc = 0; cc < 2; ++cc) {
          for (int a = 0; a < nb; ++a) {
            builder.add(row, u_map.global(c, a, cc), ke[((d * nb + b) * 2 + cc) * nb + a]);
          }
        }
      }
    }
  }
  return builder.build();
}

/// B[q, v] = (q, div v); rows follow the total-pressure space.
inline SparseMatrix assemble_div_coupling(const Mesh& mesh, const DofMap& u_map, const DofMap& pt_map) {
  if (u_map.kind.components != 2) throw std::invalid_argument("assemble_div_coupling: vector u space required");
  detail::require_scalar(pt_map, "assemble_div_coupling");
  const auto& rule = detail::volume_rule();
  const auto tu = tabulate(ElementKind{u_map.kind.order, 1}, rule);
  const auto tp = tabulate(pt_map.kind, rule);
  MatrixBuilder builder(pt_map.size(), u_map.size());
  const int nu = tu.num_basis, np = tp.num_basis;
  std::vector<double> be(np * 2 * nu);
  std::vector<Vec2> grads;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    std::fill(be.begin(), be.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      detail::physical_gradients(g, tu.at[q], grads);
      const double w = rule.weights[q] * std::abs(g.det);
      for (int i = 0; i < np; ++i) {
        const double qi = tp.at[q].values[i] * w;
        for (int comp = 0; comp < 2; ++comp) {
          for (int a = 0; a < nu; ++a) be[(i * 2 + comp) * nu + a] += qi * grads[a][comp];
        }
      }
    }
    for (int i = 0; i < np; ++i) {
      const int row = pt_map.global(c, i);
      for (int comp = 0; comp < 2; ++comp) {
        for (int a = 0; a < nu; ++a) builder.add(row, u_map.global(c, a, comp), be[(i * 2 + comp) * nu + a]);
      }
    }
  }
  return builder.build();
}

/// weight * (p, q) between two scalar spaces (rows: row_map).
inline SparseMatrix assemble_weighted_mass(const Mesh& mesh, const DofMap& row_map, const DofMap& col_map,
                                           double weight) {
  detail::require_scalar(row_map, "assemble_weighted_mass");
  detail::require_scalar(col_map, "assemble_weighted_mass");
  if (!(weight >= 0.0)) throw std::invalid_argument("assemble_weighted_mass: weight must be >= 0");
  const auto& rule = detail::volume_rule();
  const auto tr = tabulate(row_map.kind, rule);
  const auto tc = tabulate(col_map.kind, rule);
  const int nr = tr.num_basis, ncb = tc.num_basis;
  MatrixBuilder builder(row_map.size(), col_map.size());
  std::vector<double> me(nr * ncb);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    std::fill(me.begin(), me.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * std::abs(g.det) * weight;
      for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < ncb; ++j) me[i * ncb + j] += w * (tr.at[q].values[i] * tc.at[q].values[j]);
      }
    }
    for (int i = 0; i < nr; ++i) {
      for (int j = 0; j < ncb; ++j) builder.add(row_map.global(c, i), col_map.global(c, j), me[i * ncb + j]);
    }
  }
  return builder.build();
}

/// weight * (grad p, grad q) on a continuous scalar space.
inline SparseMatrix assemble_laplacian(const Mesh& mesh, const DofMap& map, double weight) {
  detail::require_scalar(map, "assemble_laplacian");
  if (map.kind.order < 1) throw std::invalid_argument("assemble_laplacian: continuous space required");
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(map.kind, rule);
  const int nb = table.num_basis;
  MatrixBuilder builder(map.size(), map.size());
  std::vector<double> ke(nb * nb);
  std::vector<Vec2> grads;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    std::fill(ke.begin(), ke.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      detail::physical_gradients(g, table.at[q], grads);
      const double w = rule.weights[q] * std::abs(g.det) * weight;
      for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nb; ++j) ke[i * nb + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
      }
    }
    for (int i = 0; i < nb; ++i) {
      for (int j = 0; j < nb; ++j) builder.add(map.global(c, i), map.global(c, j), ke[i * nb + j]);
    }
  }
  return builder.build();
}

/// (kappa dt grad p, grad q) on the pore-pressure space.
inline SparseMatrix assemble_pressure_stiffness(const Mesh& mesh, const DofMap& pp_map, const ModelParams& params) {
  return assemble_laplacian(mesh, pp_map, params.kappa_dt());
}

/// gamma2/(2 mu) * sum_e h_e^power <[p], [q]>_e over interior edges, P0 space,
/// with h_e = |e|. The default power 1 gives an O(h) consistency error for
/// piecewise constants; power -1 weights the jumps with O(1) and does not
/// converge on the manufactured problem.
inline SparseMatrix assemble_stab_jump(const Mesh& mesh, const EdgeTopology& topo, const DofMap& pt_map,
                                       const ModelParams& params, double h_power = 1.0) {
  if (pt_map.kind != ElementKind::P0()) throw std::invalid_argument("assemble_stab_jump: P0 space required");
  if (pt_map.num_scalar != mesh.num_cells()) throw std::invalid_argument("assemble_stab_jump: map/mesh mismatch");
  MatrixBuilder builder(pt_map.size(), pt_map.size());
  const double scale = params.stab_scale();
  for (int e = 0; e < topo.num_edges(); ++e) {
    if (!topo.is_interior(e)) continue;
    // P0 jumps are constant along e: <[p],[q]>_e = |e| [p][q].
    const double len = topo.length[e];
    const double w = scale * std::pow(len, h_power + 1.0);
    const int k1 = pt_map.global(topo.cells[e][0].cell, 0);
    const int k2 = pt_map.global(topo.cells[e][1].cell, 0);
    builder.add(k1, k1, w);
    builder.add(k1, k2, -w);
    builder.add(k2, k1, -w);
    builder.add(k2, k2, w);
  }
  return builder.build();
}

/// gamma2/(2 mu) * sum_T h_T^2 (grad p, grad q)_T, continuous P1 space.
/// h_T is the longest edge of T.
inline SparseMatrix assemble_stab_gradgrad(const Mesh& mesh, const DofMap& pt_map, const ModelParams& params) {
  if (pt_map.kind != ElementKind::P1()) throw std::invalid_argument("assemble_stab_gradgrad: scalar P1 space required");
  const auto table = tabulate(pt_map.kind, quadrature_rule(1));
  MatrixBuilder builder(pt_map.size(), pt_map.size());
  std::vector<Vec2> grads;
  const double scale = params.stab_scale();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    detail::physical_gradients(g, table.at[0], grads);
    const double hT = g.diameter();
    const double w = scale * hT * hT * g.area();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        builder.add(pt_map.global(c, i), pt_map.global(c, j),
                    w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]));
      }
    }
  }
  return builder.build();
}

/// -gamma2/(2 mu) * sum_T h_T^2 (f, grad q)_T on a continuous P1 space.
inline std::vector<double> assemble_stab_rhs(const Mesh& mesh, const DofMap& pt_map, const VectorFn& f,
                                             const ModelParams& params, double t) {
  if (pt_map.kind != ElementKind::P1()) throw std::invalid_argument("assemble_stab_rhs: scalar P1 space required");
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(pt_map.kind, rule);
  std::vector<double> out(pt_map.size(), 0.0);
  std::vector<Vec2> grads;
  const double scale = params.stab_scale();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    detail::physical_gradients(g, table.at[0], grads);  // constant on T
    const double hT = g.diameter();
    Vec2 fint{0.0, 0.0};
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 fv = f(g.map(rule.points[q]), t);
      const double w = rule.weights[q] * std::abs(g.det);
      fint[0] += w * fv[0];
      fint[1] += w * fv[1];
    }
    for (int i = 0; i < 3; ++i) {
      out[pt_map.global(c, i)] -= scale * hT * hT * (fint[0] * grads[i][0] + fint[1] * grads[i][1]);
    }
  }
  return out;
}

/// (f, v) for a 2-vector space.
inline std::vector<double> assemble_vector_load(const Mesh& mesh, const DofMap& u_map, const VectorFn& f, double t) {
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(ElementKind{u_map.kind.order, 1}, rule);
  std::vector<double> out(u_map.size(), 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Vec2 fv = f(g.map(rule.points[q]), t);
      const double w = rule.weights[q] * std::abs(g.det);
      for (int a = 0; a < table.num_basis; ++a) {
        const double phi = table.at[q].values[a] * w;
        out[u_map.global(c, a, 0)] += phi * fv[0];
        out[u_map.global(c, a, 1)] += phi * fv[1];
      }
    }
  }
  return out;
}

/// (g, q) for a scalar space.
inline std::vector<double> assemble_scalar_load(const Mesh& mesh, const DofMap& map, const ScalarFn& g_fn, double t) {
  detail::require_scalar(map, "assemble_scalar_load");
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(map.kind, rule);
  std::vector<double> out(map.size(), 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double gv = g_fn(g.map(rule.points[q]), t);
      const double w = rule.weights[q] * std::abs(g.det);
      for (int a = 0; a < table.num_basis; ++a) out[map.global(c, a)] += table.at[q].values[a] * w * gv;
    }
  }
  return out;
}

/// weight * (G, grad q) for a continuous scalar space.
inline std::vector<double> assemble_gradient_load(const Mesh& mesh, const DofMap& map, const VectorFn& field,
                                                  double weight, double t) {
  detail::require_scalar(map, "assemble_gradient_load");
  if (map.kind.order < 1) throw std::invalid_argument("assemble_gradient_load: continuous space required");
  const auto& rule = detail::volume_rule();
  const auto table = tabulate(map.kind, rule);
  std::vector<double> out(map.size(), 0.0);
  std::vector<Vec2> grads;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_geometry(mesh, c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      detail::physical_gradients(g, table.at[q], grads);
      const Vec2 fv = field(g.map(rule.points[q]), t);
      const double w = rule.weights[q] * std::abs(g.det) * weight;
      for (int a = 0; a < table.num_basis; ++a) {
        out[map.global(c, a)] += w * (fv[0] * grads[a][0] + fv[1] * grads[a][1]);
      }
    }
  }
  return out;
}

/// <sigma n, v> over edges tagged natural in the displacement partition.
inline void add_traction_load(const Mesh& mesh, const EdgeTopology& topo, const BoundaryTags& tags,
                              const DofMap& u_map, const TractionFn& traction, double t,
                              std::span<double> out) {
  const auto rule = gauss_edge_rule();
  const ElementKind scalar{u_map.kind.order, 1};
  for (int e = 0; e < topo.num_edges(); ++e) {
    if (tags.displacement[e] != BoundaryTag::kNatural) continue;
    const auto [cell, local] = topo.cells[e][0];
    const auto g = cell_geometry(mesh, cell);
    const Point normal = side_normal(tags.side[e]);
    // local edge k runs from vertex (k+1)%3 to (k+2)%3
    const int i = (local + 1) % 3, j = (local + 2) % 3;
    for (int q = 0; q < 3; ++q) {
      const double s = rule.points[q];
      Bary l{0.0, 0.0, 0.0};
      l[i] = 1.0 - s;
      l[j] = s;
      const auto basis = reference_basis(scalar, l);
      const Vec2 tr = traction(g.map(l), t, normal);
      const double w = rule.weights[q] * topo.length[e];
      for (int a = 0; a < scalar.local_dofs(); ++a) {
        const double phi = basis.values[a] * w;
        if (phi == 0.0) continue;
        out[u_map.global(cell, a, 0)] += phi * tr[0];
        out[u_map.global(cell, a, 1)] += phi * tr[1];
      }
    }
  }
}

struct Loads {
  std::vector<double> u;   // (f, v) + <sigma n, v> on Gamma_t
  std::vector<double> pt;  // zero; the pressure-gradient stabilization adds its own term
  std::vector<double> pp;  // -dt (g, q_p); history terms are added by the time stepper
};

/// Right-hand sides of the static step at time t. The pore load follows the
/// continuous weak form "= -(g, q_p)", scaled by dt.
inline Loads assemble_loads(const Mesh& mesh, const EdgeTopology& topo, const BoundaryTags& tags,
                            const DofMap& u_map, const DofMap& pt_map, const DofMap& pp_map,
                            const VectorFn& f, const ScalarFn& g, const TractionFn& traction,
                            const ModelParams& params, double t) {
  Loads loads;
  loads.u = f ? assemble_vector_load(mesh, u_map, f, t) : std::vector<double>(u_map.size(), 0.0);
  if (traction) add_traction_load(mesh, topo, tags, u_map, traction, t, loads.u);
  loads.pt.assign(pt_map.size(), 0.0);
  if (g) {
    loads.pp = assemble_scalar_load(mesh, pp_map, g, t);
    for (double& v : loads.pp) v *= -params.dt;
  } else {
    loads.pp.assign(pp_map.size(), 0.0);
  }
  return loads;
}

/// Symmetric 3x3 block operator (u, p_t, p_p) with right-hand side.
struct BlockSystem {
  SparseMatrix matrix;
  std::vector<double> rhs;
  std::array<int, 3> block_sizes{0, 0, 0};

  int size() const { return block_sizes[0] + block_sizes[1] + block_sizes[2]; }
  std::array<int, 3> offsets() const { return {0, block_sizes[0], block_sizes[0] + block_sizes[1]}; }
};

/// Symmetric elimination of a fixed set of constrained dofs. The reduced
/// matrix keeps the free rows and columns in their original order; the
/// constrained values enter the right-hand side through the free x
/// constrained coupling.
class DirichletReduction {
 public:
  DirichletReduction() = default;

  DirichletReduction(const SparseMatrix& full, std::vector<int> constrained)
      : full_size_(full.rows), constrained_(std::move(constrained)) {
    if (full.rows != full.cols) throw std::invalid_argument("DirichletReduction: square matrix required");
    std::sort(constrained_.begin(), constrained_.end());
    constrained_.erase(std::unique(constrained_.begin(), constrained_.end()), constrained_.end());
    full_to_free_.assign(full_size_, -1);
    std::vector<int> full_to_con(full_size_, -1);
    for (std::size_t k = 0; k < constrained_.size(); ++k) {
      const int d = constrained_[k];
      if (d < 0 || d >= full_size_) {
        throw std::out_of_range("DirichletReduction: constrained index " + std::to_string(d) + " out of range");
      }
      full_to_con[d] = static_cast<int>(k);
    }
    for (int i = 0; i < full_size_; ++i) {
      if (full_to_con[i] < 0) {
        full_to_free_[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      }
    }
    const int nf = static_cast<int>(free_.size());
    reduced_ = extract(full, full_to_free_, nf, full_to_free_, nf);
    coupling_ = extract(full, full_to_free_, nf, full_to_con, static_cast<int>(constrained_.size()));
  }

  const SparseMatrix& reduced() const { return reduced_; }
  const std::vector<int>& free_dofs() const { return free_; }
  const std::vector<int>& constrained_dofs() const { return constrained_; }
  int free_size() const { return static_cast<int>(free_.size()); }
  int full_size() const { return full_size_; }

  /// b_free - A_fc g
  std::vector<double> reduce_rhs(std::span<const double> full_rhs, std::span<const double> values) const {
    if (values.size() != constrained_.size()) throw std::invalid_argument("reduce_rhs: value count mismatch");
    std::vector<double> b(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) b[i] = full_rhs[free_[i]];
    coupling_.multiply_add(-1.0, values, b);
    return b;
  }

  std::vector<double> restrict_to_free(std::span<const double> full) const {
    std::vector<double> out(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) out[i] = full[free_[i]];
    return out;
  }

  std::vector<double> expand(std::span<const double> free_values, std::span<const double> values) const {
    std::vector<double> x(full_size_, 0.0);
    for (std::size_t i = 0; i < free_.size(); ++i) x[free_[i]] = free_values[i];
    for (std::size_t k = 0; k < constrained_.size(); ++k) x[constrained_[k]] = values[k];
    return x;
  }

 private:
  int full_size_ = 0;
  std::vector<int> constrained_;
  std::vector<int> free_;
  std::vector<int> full_to_free_;
  SparseMatrix reduced_;
  SparseMatrix coupling_;
};

/// Block-local constraint sets mapped into monolithic numbering.
inline std::pair<std::vector<int>, std::vector<double>> monolithic_constraints(
    const BlockSystem& system, const std::array<DirichletSet, 3>& sets) {
  const auto off = system.offsets();
  std::vector<std::pair<int, double>> all;
  for (int b = 0; b < 3; ++b) {
    if (sets[b].dofs.size() != sets[b].values.size()) {
      throw std::invalid_argument("apply_dirichlet: dof/value count mismatch");
    }
    for (std::size_t k = 0; k < sets[b].dofs.size(); ++k) {
      const int d = sets[b].dofs[k];
      if (d < 0 || d >= system.block_sizes[b]) {
        throw std::out_of_range("apply_dirichlet: constraint index " + std::to_string(d) + " out of range for block " +
                                std::to_string(b));
      }
      all.emplace_back(off[b] + d, sets[b].values[k]);
    }
  }
  std::sort(all.begin(), all.end());
  std::pair<std::vector<int>, std::vector<double>> out;
  for (const auto& [d, v] : all) {
    if (!out.first.empty() && out.first.back() == d) continue;
    out.first.push_back(d);
    out.second.push_back(v);
  }
  return out;
}

/// Eliminates constrained dofs symmetrically. The result is the free-dof
/// system with the right-hand side lifted by -A_fc g; its block sizes count
/// free dofs per field.
inline BlockSystem apply_dirichlet(const BlockSystem& system, const std::array<DirichletSet, 3>& sets) {
  const auto [dofs, values] = monolithic_constraints(system, sets);
  const DirichletReduction red(system.matrix, dofs);
  BlockSystem out;
  out.matrix = red.reduced();
  std::vector<double> rhs = system.rhs;
  rhs.resize(system.size(), 0.0);
  out.rhs = red.reduce_rhs(rhs, values);
  for (int b = 0; b < 3; ++b) {
    out.block_sizes[b] = system.block_sizes[b] - static_cast<int>(sets[b].dofs.size());
  }
  return out;
}

}  // namespace biot
