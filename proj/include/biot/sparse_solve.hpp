#pragma once

/// \file sparse_solve.hpp
/// \brief Reverse Cuthill-McKee ordering, envelope Cholesky, Jacobi,
/// preconditioned MinRes and the 3x3 block-diagonal preconditioner.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "biot/sparse.hpp"

namespace biot {

/// perm[new] = old
using Permutation = std::vector<int>;

inline Permutation inverse_permutation(const Permutation& perm) {
  Permutation inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

/// Symmetrized adjacency (diagonal excluded), neighbours sorted.
inline std::vector<std::vector<int>> adjacency(const SparseMatrix& a) {
  std::vector<std::vector<int>> adj(a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j : a.row_cols(i)) {
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& n : adj) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return adj;
}

/// max |i - j| over stored entries of P A P^T (identity when perm is empty).
inline int bandwidth(const SparseMatrix& a, const Permutation& perm = {}) {
  Permutation inv = perm.empty() ? Permutation{} : inverse_permutation(perm);
  int bw = 0;
  for (int i = 0; i < a.rows; ++i) {
    for (int j : a.row_cols(i)) {
      const int pi = inv.empty() ? i : inv[i];
      const int pj = inv.empty() ? j : inv[j];
      bw = std::max(bw, std::abs(pi - pj));
    }
  }
  return bw;
}

namespace detail {

/// BFS level structure from root restricted to unvisited nodes.
inline std::vector<std::vector<int>> level_structure(const std::vector<std::vector<int>>& adj, int root,
                                                     const std::vector<char>& done) {
  std::vector<std::vector<int>> levels{{root}};
  std::vector<char> seen(adj.size(), 0);
  seen[root] = 1;
  while (true) {
    std::vector<int> next;
    for (int v : levels.back()) {
      for (int w : adj[v]) {
        if (!seen[w] && !done[w]) {
          seen[w] = 1;
          next.push_back(w);
        }
      }
    }
    if (next.empty()) break;
    levels.push_back(std::move(next));
  }
  return levels;
}

/// George-Liu pseudo-peripheral node search.
inline int pseudo_peripheral(const std::vector<std::vector<int>>& adj, int start, const std::vector<char>& done) {
  int root = start;
  auto levels = level_structure(adj, root, done);
  while (true) {
    const auto& last = levels.back();
    int best = last.front();
    for (int v : last) {
      if (adj[v].size() < adj[best].size() || (adj[v].size() == adj[best].size() && v < best)) best = v;
    }
    auto trial = level_structure(adj, best, done);
    if (trial.size() <= levels.size()) return root;
    root = best;
    levels = std::move(trial);
  }
}

}  // namespace detail

/// Reverse Cuthill-McKee ordering of a structurally symmetric pattern.
/// Components are ordered by their smallest node index and reversed
/// individually, so a diagonal pattern yields the identity.
inline Permutation rcm_ordering(const SparseMatrix& pattern) {
  const auto adj = adjacency(pattern);
  const int n = pattern.rows;
  Permutation order;
  order.reserve(n);
  std::vector<char> done(n, 0);
  auto by_degree = [&adj](int a, int b) {
    return adj[a].size() < adj[b].size() || (adj[a].size() == adj[b].size() && a < b);
  };
  for (int s = 0; s < n; ++s) {
    if (done[s]) continue;
    const int root = detail::pseudo_peripheral(adj, s, done);
    const std::size_t begin = order.size();
    std::deque<int> queue{root};
    done[root] = 1;
    std::vector<int> nbrs;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      nbrs.clear();
      for (int w : adj[v]) {
        if (!done[w]) {
          done[w] = 1;
          nbrs.push_back(w);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(), by_degree);
      queue.insert(queue.end(), nbrs.begin(), nbrs.end());
    }
    std::reverse(order.begin() + static_cast<std::ptrdiff_t>(begin), order.end());
  }
  return order;
}

class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(int pivot, double value)
      : std::runtime_error("Cholesky: non-positive pivot " + std::to_string(value) + " at row " +
                           std::to_string(pivot) + " (matrix is not SPD)"),
        pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// P A P^T = L L^T with P from RCM. L is stored by rows over the envelope
/// (first nonzero column of each row through the diagonal); the envelope
/// of L equals that of P A P^T.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  explicit CholeskyFactor(const SparseMatrix& a, Permutation perm = {}) : n_(a.rows) {
    if (a.rows != a.cols) throw std::invalid_argument("CholeskyFactor: square matrix required");
    perm_ = perm.empty() ? rcm_ordering(a) : std::move(perm);
    const Permutation inv = inverse_permutation(perm_);
    first_.assign(n_, 0);
    for (int i = 0; i < n_; ++i) {
      int f = i;
      for (int oj : a.row_cols(perm_[i])) f = std::min(f, inv[oj]);
      first_[i] = f;
    }
    offset_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i) offset_[i + 1] = offset_[i] + static_cast<std::size_t>(i - first_[i] + 1);
    store_.assign(offset_[n_], 0.0);
    for (int i = 0; i < n_; ++i) {
      const int oi = perm_[i];
      const auto cols = a.row_cols(oi);
      const auto vals = a.row_values(oi);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        const int j = inv[cols[k]];
        if (j <= i) store_[offset_[i] + (j - first_[i])] = vals[k];
      }
    }
    factorize();
  }

  int size() const { return n_; }
  std::size_t nnz() const { return store_.size(); }
  const Permutation& permutation() const { return perm_; }

  void solve(std::span<const double> b, std::span<double> x) const {
    std::vector<double> y(n_);
    for (int i = 0; i < n_; ++i) y[i] = b[perm_[i]];
    for (int i = 0; i < n_; ++i) {
      const double* li = &store_[offset_[i]];
      const int fi = first_[i];
      double s = y[i];
      for (int j = fi; j < i; ++j) s -= li[j - fi] * y[j];
      y[i] = s / li[i - fi];
    }
    for (int i = n_ - 1; i >= 0; --i) {
      const double* li = &store_[offset_[i]];
      const int fi = first_[i];
      const double xi = y[i] / li[i - fi];
      y[i] = xi;
      for (int j = fi; j < i; ++j) y[j] -= li[j - fi] * xi;
    }
    for (int i = 0; i < n_; ++i) x[perm_[i]] = y[i];
  }

  std::vector<double> solve(std::span<const double> b) const {
    std::vector<double> x(n_);
    solve(b, x);
    return x;
  }

 private:
  void factorize() {
    for (int i = 0; i < n_; ++i) {
      double* li = &store_[offset_[i]];
      const int fi = first_[i];
      const double aii = li[i - fi];
      for (int j = fi; j < i; ++j) {
        const double* lj = &store_[offset_[j]];
        const int fj = first_[j];
        const int k0 = std::max(fi, fj);
        double s = li[j - fi];
        const double* pi = li + (k0 - fi);
        const double* pj = lj + (k0 - fj);
        for (int k = 0; k < j - k0; ++k) s -= pi[k] * pj[k];
        li[j - fi] = s / lj[j - fj];
      }
      double d = aii;
      for (int k = 0; k < i - fi; ++k) d -= li[k] * li[k];
      if (!(d > 1e-14 * std::abs(aii)) || !std::isfinite(d)) throw NotPositiveDefinite(perm_[i], d);
      li[i - fi] = std::sqrt(d);
    }
  }

  int n_ = 0;
  Permutation perm_;
  std::vector<int> first_;
  std::vector<std::size_t> offset_;
  std::vector<double> store_;
};

inline CholeskyFactor cholesky_factorize(const SparseMatrix& a) { return CholeskyFactor(a); }

inline std::vector<double> cholesky_solve(const CholeskyFactor& f, std::span<const double> b) { return f.solve(b); }

/// Diagonal inverse.
class JacobiSolver {
 public:
  JacobiSolver() = default;
  explicit JacobiSolver(const SparseMatrix& a) {
    const auto d = a.diagonal();
    inv_diag_.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (!(d[i] > 0.0)) throw NotPositiveDefinite(static_cast<int>(i), d[i]);
      inv_diag_[i] = 1.0 / d[i];
    }
  }
  int size() const { return static_cast<int>(inv_diag_.size()); }
  void solve(std::span<const double> b, std::span<double> x) const {
    for (std::size_t i = 0; i < inv_diag_.size(); ++i) x[i] = inv_diag_[i] * b[i];
  }

 private:
  std::vector<double> inv_diag_;
};

/// Exact solve with a (shared) Cholesky factor of A, applied to scale * A.
struct ScaledCholesky {
  std::shared_ptr<const CholeskyFactor> factor;
  double scale = 1.0;

  int size() const { return factor->size(); }
  void solve(std::span<const double> b, std::span<double> x) const {
    factor->solve(b, x);
    if (scale != 1.0) {
      for (double& v : x) v /= scale;
    }
  }
};

using InnerSolver = std::variant<ScaledCholesky, JacobiSolver>;

enum class InnerChoice { kCholesky, kJacobi };

inline int inner_size(const InnerSolver& s) {
  return std::visit([](const auto& v) { return v.size(); }, s);
}

class SingularBlockError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// diag(P_u, P_pt, P_pp): each block applies an SPD inner solver.
class BlockPreconditioner {
 public:
  BlockPreconditioner() = default;
  explicit BlockPreconditioner(std::array<InnerSolver, 3> inner) : inner_(std::move(inner)) {}

  int size() const { return inner_size(inner_[0]) + inner_size(inner_[1]) + inner_size(inner_[2]); }
  const InnerSolver& block(int b) const { return inner_[b]; }

  void apply(std::span<const double> r, std::span<double> z) const {
    std::size_t off = 0;
    for (const auto& s : inner_) {
      const auto n = static_cast<std::size_t>(inner_size(s));
      std::visit([&](const auto& v) { v.solve(r.subspan(off, n), z.subspan(off, n)); }, s);
      off += n;
    }
  }

 private:
  std::array<InnerSolver, 3> inner_;
};

inline InnerSolver make_inner_solver(const SparseMatrix& block, InnerChoice choice) {
  if (choice == InnerChoice::kJacobi) return JacobiSolver(block);
  return ScaledCholesky{std::make_shared<const CholeskyFactor>(block), 1.0};
}

/// Factors the three norm blocks. A p_p block that is not SPD is reported
/// as SingularBlockError (s0 = 0, lambda^-1 = 0 and no pressure Dirichlet
/// boundary leaves constants in its kernel).
inline BlockPreconditioner build_block_preconditioner(const std::array<SparseMatrix, 3>& blocks,
                                                      const std::array<InnerChoice, 3>& inner) {
  static constexpr std::array<const char*, 3> names{"displacement", "total pressure", "pore pressure"};
  std::array<InnerSolver, 3> solvers;
  for (int b = 0; b < 3; ++b) {
    try {
      solvers[b] = make_inner_solver(blocks[b], inner[b]);
    } catch (const NotPositiveDefinite& e) {
      throw SingularBlockError(std::string(names[b]) + " preconditioner block is singular: " + e.what());
    }
  }
  return BlockPreconditioner(std::move(solvers));
}

/// y = Op(x)
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

inline LinearOperator as_operator(const SparseMatrix& a) {
  return [&a](std::span<const double> x, std::span<double> y) { a.multiply(x, y); };
}

inline LinearOperator as_operator(const BlockPreconditioner& p) {
  return [&p](std::span<const double> x, std::span<double> y) { p.apply(x, y); };
}

struct SolveReport {
  int iterations = 0;
  /// Relative residual per iteration (entry 0 is the initial residual, 1.0).
  std::vector<double> residual_history;
  bool converged = false;
  bool breakdown = false;
  double seconds = 0.0;
  std::string solver = "minres";
  std::string message;

  double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

struct MinresOptions {
  double rtol = 1e-6;
  int maxit = 500;
};

/// Preconditioned MinRes (Paige-Saunders recurrences). Convergence is
/// measured in the preconditioned residual norm sqrt(r^T M r) relative to
/// its initial value. x holds the initial guess on entry.
inline SolveReport minres(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                          std::span<double> x, const MinresOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = b.size();
  SolveReport rep;
  auto finish = [&]() {
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };

  std::vector<double> r1(n), r2(n), y(n), v(n), w(n, 0.0), w1(n), w2(n, 0.0), tmp(n);
  op(x, tmp);
  for (std::size_t i = 0; i < n; ++i) r1[i] = b[i] - tmp[i];
  precond(r1, y);
  double beta1 = dot(r1, y);
  if (beta1 < 0.0) {
    rep.breakdown = true;
    rep.message = "preconditioner is not positive definite";
    return finish();
  }
  beta1 = std::sqrt(beta1);
  rep.residual_history.push_back(1.0);
  if (beta1 == 0.0) {
    rep.converged = true;
    return finish();
  }
  r2 = r1;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  constexpr double tiny = std::numeric_limits<double>::epsilon();

  for (int k = 1; k <= opt.maxit; ++k) {
    const double s = 1.0 / beta;
    for (std::size_t i = 0; i < n; ++i) v[i] = s * y[i];
    op(v, y);
    if (k >= 2) {
      const double c = beta / oldb;
      for (std::size_t i = 0; i < n; ++i) y[i] -= c * r1[i];
    }
    const double alfa = dot(v, y);
    const double c2 = alfa / beta;
    for (std::size_t i = 0; i < n; ++i) y[i] -= c2 * r2[i];
    std::swap(r1, r2);
    r2 = y;
    precond(r2, y);
    oldb = beta;
    const double bb = dot(r2, y);
    if (bb < 0.0 || !std::isfinite(bb) || !std::isfinite(alfa)) {
      rep.breakdown = true;
      rep.iterations = k;
      rep.message = std::isfinite(bb) ? "preconditioner is not positive definite" : "NaN breakdown";
      return finish();
    }
    beta = std::sqrt(bb);

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    std::swap(w1, w2);  // w1 <- w2 (old), then w2 <- w
    std::swap(w2, w);
    const double ig = 1.0 / gamma;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = (v[i] - oldeps * w1[i] - delta * w2[i]) * ig;
      x[i] += phi * w[i];
    }
    const double rel = phibar / beta1;
    rep.iterations = k;
    rep.residual_history.push_back(rel);
    if (!std::isfinite(rel)) {
      rep.breakdown = true;
      rep.message = "NaN breakdown";
      return finish();
    }
    if (rel <= opt.rtol) {
      rep.converged = true;
      return finish();
    }
    if (beta == 0.0) {
      // invariant subspace: solution is exact
      rep.converged = true;
      return finish();
    }
  }
  rep.message = "maximum iterations reached";
  return finish();
}

}  // namespace biot
