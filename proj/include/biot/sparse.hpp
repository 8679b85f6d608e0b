#pragma once

/// \file sparse.hpp
/// \brief Compressed-row sparse matrices and a deterministic builder.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace biot {

/// CSR matrix with sorted, duplicate-free column indices per row.
struct SparseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  std::span<const int> row_cols(int i) const {
    return {col_idx.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }
  std::span<const double> row_values(int i) const {
    return {values.data() + row_ptr[i], static_cast<std::size_t>(row_ptr[i + 1] - row_ptr[i])};
  }

  /// Entry (i, j); zero when not stored.
  double at(int i, int j) const {
    const auto c = row_cols(i);
    const auto it = std::lower_bound(c.begin(), c.end(), j);
    if (it == c.end() || *it != j) return 0.0;
    return values[row_ptr[i] + static_cast<int>(it - c.begin())];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < rows; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col_idx[k]];
      y[i] = s;
    }
  }
  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(rows);
    multiply(x, y);
    return y;
  }
  /// y += a * A x
  void multiply_add(double a, std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < rows; ++i) {
      double s = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += values[k] * x[col_idx[k]];
      y[i] += a * s;
    }
  }
  /// x^T A y
  double bilinear(std::span<const double> x, std::span<const double> y) const {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) {
      double r = 0.0;
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) r += values[k] * y[col_idx[k]];
      s += x[i] * r;
    }
    return s;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(std::min(rows, cols), 0.0);
    for (int i = 0; i < static_cast<int>(d.size()); ++i) d[i] = at(i, i);
    return d;
  }

  SparseMatrix scaled(double a) const {
    SparseMatrix m = *this;
    for (double& v : m.values) v *= a;
    return m;
  }

  SparseMatrix transpose() const {
    SparseMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.row_ptr.assign(cols + 1, 0);
    for (int j : col_idx) ++t.row_ptr[j + 1];
    std::partial_sum(t.row_ptr.begin(), t.row_ptr.end(), t.row_ptr.begin());
    t.col_idx.resize(nnz());
    t.values.resize(nnz());
    std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (int i = 0; i < rows; ++i) {
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        const int dst = next[col_idx[k]]++;
        t.col_idx[dst] = i;
        t.values[dst] = values[k];
      }
    }
    return t;
  }

  /// max |A - A^T| over stored entries of both.
  double max_asymmetry() const {
    if (rows != cols) throw std::invalid_argument("max_asymmetry: matrix is not square");
    double m = 0.0;
    for (int i = 0; i < rows; ++i) {
      for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
        m = std::max(m, std::abs(values[k] - at(col_idx[k], i)));
      }
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }

  static SparseMatrix identity(int n) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.row_ptr.resize(n + 1);
    std::iota(m.row_ptr.begin(), m.row_ptr.end(), 0);
    m.col_idx.resize(n);
    std::iota(m.col_idx.begin(), m.col_idx.end(), 0);
    m.values.assign(n, 1.0);
    return m;
  }
};

/// Row-wise accumulator. Entries of a row are kept in insertion order and
/// merged after a stable sort by column, so the result depends only on the
/// order of the add() calls.
class MatrixBuilder {
 public:
  MatrixBuilder(int rows, int cols) : rows_(rows), cols_(cols), entries_(rows) {}

  void add(int i, int j, double v) {
    if (i < 0 || i >= rows_ || j < 0 || j >= cols_) {
      throw std::out_of_range("MatrixBuilder::add: (" + std::to_string(i) + ", " +
                              std::to_string(j) + ") outside " + std::to_string(rows_) + "x" +
                              std::to_string(cols_));
    }
    entries_[i].emplace_back(j, v);
  }

  /// Adds scale * block at offset (row0, col0).
  void add_block(const SparseMatrix& block, int row0, int col0, double scale = 1.0) {
    for (int i = 0; i < block.rows; ++i) {
      for (int k = block.row_ptr[i]; k < block.row_ptr[i + 1]; ++k) {
        add(row0 + i, col0 + block.col_idx[k], scale * block.values[k]);
      }
    }
  }

  /// Explicit zeros are kept so that matrices assembled from the same
  /// cells share one sparsity pattern.
  SparseMatrix build() {
    SparseMatrix m;
    m.rows = rows_;
    m.cols = cols_;
    m.row_ptr.assign(rows_ + 1, 0);
    for (int i = 0; i < rows_; ++i) {
      auto& row = entries_[i];
      std::stable_sort(row.begin(), row.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t k = 0; k < row.size();) {
        const int j = row[k].first;
        double s = 0.0;
        for (; k < row.size() && row[k].first == j; ++k) s += row[k].second;
        m.col_idx.push_back(j);
        m.values.push_back(s);
      }
      m.row_ptr[i + 1] = static_cast<int>(m.col_idx.size());
      row.clear();
      row.shrink_to_fit();
    }
    return m;
  }

 private:
  int rows_;
  int cols_;
  std::vector<std::vector<std::pair<int, double>>> entries_;
};

/// Linear combination of matrices (any patterns) of equal shape.
inline SparseMatrix combine(std::initializer_list<std::pair<double, const SparseMatrix*>> terms) {
  if (terms.size() == 0) throw std::invalid_argument("combine: no terms");
  const int rows = terms.begin()->second->rows;
  const int cols = terms.begin()->second->cols;
  MatrixBuilder b(rows, cols);
  for (const auto& [a, m] : terms) {
    if (m->rows != rows || m->cols != cols) throw std::invalid_argument("combine: shape mismatch");
    b.add_block(*m, 0, 0, a);
  }
  return b.build();
}

/// Submatrix A(row_map, col_map) where map[old] = new index or -1 to drop.
inline SparseMatrix extract(const SparseMatrix& a, const std::vector<int>& row_map, int new_rows,
                            const std::vector<int>& col_map, int new_cols) {
  SparseMatrix m;
  m.rows = new_rows;
  m.cols = new_cols;
  m.row_ptr.assign(new_rows + 1, 0);
  std::vector<int> order(new_rows, -1);
  for (int i = 0; i < a.rows; ++i) {
    if (row_map[i] >= 0) order[row_map[i]] = i;
  }
  for (int r = 0; r < new_rows; ++r) {
    const int i = order[r];
    std::vector<std::pair<int, double>> row;
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const int j = col_map[a.col_idx[k]];
      if (j >= 0) row.emplace_back(j, a.values[k]);
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      m.col_idx.push_back(j);
      m.values.push_back(v);
    }
    m.row_ptr[r + 1] = static_cast<int>(m.col_idx.size());
  }
  return m;
}

/// MatrixMarket coordinate format, real general, 1-based indices.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.rows << ' ' << a.cols << ' ' << a.nnz() << '\n';
  os.precision(17);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      os << i + 1 << ' ' << a.col_idx[k] + 1 << ' ' << a.values[k] << '\n';
    }
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace biot
