#pragma once

/// \file direct.hpp
/// \brief Sparse direct solves of the full indefinite operator through Eigen.
/// LDL^T with AMD ordering is tried first (the static operator is
/// quasi-definite whenever s0 + alpha^2/lambda > 0 or a pressure boundary is
/// fixed); LU is the fallback.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "biot/sparse.hpp"

namespace biot {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

inline EigenSparse to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(a.nnz());
  for (int i = 0; i < a.rows; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) trip.emplace_back(i, a.col_idx[k], a.values[k]);
  }
  EigenSparse m(a.rows, a.cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

class DirectSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Factor once, solve many.
class DirectSolver {
 public:
  explicit DirectSolver(const SparseMatrix& a, double check_tol = 1e-8) : n_(a.rows) {
    if (a.rows != a.cols) throw std::invalid_argument("DirectSolver: square matrix required");
    const auto start = std::chrono::steady_clock::now();
    const EigenSparse m = to_eigen(a);
    ldlt_ = std::make_unique<Eigen::SimplicialLDLT<EigenSparse>>();
    ldlt_->compute(m);
    if (ldlt_->info() != Eigen::Success || !self_check(a, check_tol)) {
      ldlt_.reset();
      lu_ = std::make_unique<Eigen::SparseLU<EigenSparse>>();
      lu_->analyzePattern(m);
      lu_->factorize(m);
      if (lu_->info() != Eigen::Success) throw DirectSolveError("sparse LU failed: " + lu_->lastErrorMessage());
      if (!self_check(a, check_tol)) throw DirectSolveError("sparse LU solve failed the residual check");
    }
    factor_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  int size() const { return n_; }
  std::string method() const { return ldlt_ ? "ldlt" : "lu"; }
  double factor_seconds() const { return factor_seconds_; }

  std::vector<double> solve(std::span<const double> b) const {
    if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("DirectSolver::solve: size mismatch");
    const Eigen::Map<const Eigen::VectorXd> rhs(b.data(), n_);
    Eigen::VectorXd x = ldlt_ ? Eigen::VectorXd(ldlt_->solve(rhs)) : Eigen::VectorXd(lu_->solve(rhs));
    return {x.data(), x.data() + n_};
  }

 private:
  // Solves A x = A y for a fixed pseudo-random y.
  bool self_check(const SparseMatrix& a, double tol) const {
    std::vector<double> y(n_);
    std::uint64_t s = 0x9e3779b97f4a7c15ULL;
    for (double& v : y) {
      s = s * 6364136223846793005ULL + 1442695040888963407ULL;
      v = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
    }
    const auto b = a * std::span<const double>(y);
    const auto x = solve(b);
    const auto ax = a * std::span<const double>(x);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n_; ++i) {
      num += (ax[i] - b[i]) * (ax[i] - b[i]);
      den += b[i] * b[i];
    }
    return std::isfinite(num) && num <= tol * tol * den;
  }

  int n_;
  std::unique_ptr<Eigen::SimplicialLDLT<EigenSparse>> ldlt_;
  std::unique_ptr<Eigen::SparseLU<EigenSparse>> lu_;
  double factor_seconds_ = 0.0;
};

}  // namespace biot
