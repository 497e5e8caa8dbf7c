#ifndef NQPSOR_LINALG_HPP
#define NQPSOR_LINALG_HPP

// Sparse storage for the symmetric matrices swept by SOR and the column
// operators used by normal SOR. Everything here is immutable once built.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nqpsor {

using Vector = std::vector<double>;
using Index = std::size_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline void require_size(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " +
                                std::to_string(actual) + ", expected " +
                                std::to_string(expected) + ")");
  }
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  require_size(y.size(), x.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double distance2(std::span<const double> x, std::span<const double> y) {
  require_size(y.size(), x.size(), "distance2");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double max_abs_diff(std::span<const double> x, std::span<const double> y) {
  require_size(y.size(), x.size(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
  return m;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// One stored coefficient (row, col, value).
struct Entry {
  Index row;
  Index col;
  double value;
};

/// Symmetric matrix in compressed-row form with both triangles stored, so
/// every row can be read in a single pass during a Gauss-Seidel sweep.
///
/// Construction rejects asymmetric patterns or values, duplicate entries and
/// missing or nonpositive diagonal entries.
class SparseSymMatrix {
 public:
  SparseSymMatrix() = default;

  /// Builds from a list holding both (i,j) and (j,i) for every off-diagonal.
  static SparseSymMatrix from_entries(Index n, std::vector<Entry> entries) {
    for (const auto& e : entries) {
      if (e.row >= n || e.col >= n) throw std::invalid_argument("SparseSymMatrix: index out of range");
      if (!std::isfinite(e.value)) throw std::invalid_argument("SparseSymMatrix: non-finite value");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseSymMatrix m;
    m.n_ = n;
    m.row_starts_.assign(n + 1, 0);
    m.col_indices_.reserve(entries.size());
    m.values_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k > 0 && entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
        throw std::invalid_argument("SparseSymMatrix: duplicate entry (" +
                                    std::to_string(entries[k].row) + "," +
                                    std::to_string(entries[k].col) + ")");
      }
      ++m.row_starts_[entries[k].row + 1];
      m.col_indices_.push_back(entries[k].col);
      m.values_.push_back(entries[k].value);
    }
    for (Index i = 0; i < n; ++i) m.row_starts_[i + 1] += m.row_starts_[i];
    m.finish();
    return m;
  }

  /// Builds from the lower triangle (col <= row); off-diagonals are mirrored.
  static SparseSymMatrix from_lower(Index n, const std::vector<Entry>& lower) {
    std::vector<Entry> full;
    full.reserve(2 * lower.size());
    for (const auto& e : lower) {
      if (e.col > e.row) throw std::invalid_argument("SparseSymMatrix: entry above the diagonal in lower-triangle input");
      full.push_back(e);
      if (e.col != e.row) full.push_back({e.col, e.row, e.value});
    }
    return from_entries(n, std::move(full));
  }

  /// Row-major dense input; exact zeros off the diagonal are dropped.
  static SparseSymMatrix from_dense(Index n, std::span<const double> dense) {
    require_size(dense.size(), n * n, "SparseSymMatrix::from_dense");
    std::vector<Entry> entries;
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < n; ++j) {
        const double v = dense[i * n + j];
        if (v != 0.0 || i == j) entries.push_back({i, j, v});
      }
    }
    return from_entries(n, std::move(entries));
  }

  Index n() const noexcept { return n_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const Index> row_cols(Index i) const {
    return {col_indices_.data() + row_starts_[i], row_starts_[i + 1] - row_starts_[i]};
  }
  std::span<const double> row_values(Index i) const {
    return {values_.data() + row_starts_[i], row_starts_[i + 1] - row_starts_[i]};
  }

  double diag(Index i) const { return diag_[i]; }
  std::span<const double> diagonal() const noexcept { return diag_; }
  double min_diag() const { return *std::min_element(diag_.begin(), diag_.end()); }

  std::span<const Index> row_starts() const noexcept { return row_starts_; }
  std::span<const Index> col_indices() const noexcept { return col_indices_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Returns A + sigma*I; the sparsity pattern is unchanged.
  SparseSymMatrix shifted(double sigma) const {
    SparseSymMatrix m = *this;
    for (Index i = 0; i < n_; ++i) {
      m.values_[diag_pos_[i]] += sigma;
      m.diag_[i] = m.values_[diag_pos_[i]];
    }
    if (m.min_diag() <= 0.0) throw std::invalid_argument("SparseSymMatrix: shift produced a nonpositive diagonal");
    return m;
  }

  /// Lower triangle (col <= row) in row order.
  std::vector<Entry> lower_entries() const {
    std::vector<Entry> out;
    for (Index i = 0; i < n_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1] && col_indices_[k] <= i; ++k) {
        out.push_back({i, col_indices_[k], values_[k]});
      }
    }
    return out;
  }

  Vector to_dense() const {
    Vector d(n_ * n_, 0.0);
    for (Index i = 0; i < n_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) d[i * n_ + col_indices_[k]] = values_[k];
    }
    return d;
  }

  bool operator==(const SparseSymMatrix&) const = default;

 private:
  // Validates symmetry and the diagonal, and caches diagonal positions.
  void finish() {
    diag_.assign(n_, 0.0);
    diag_pos_.assign(n_, 0);
    std::vector<bool> has_diag(n_, false);
    for (Index i = 0; i < n_; ++i) {
      for (Index k = row_starts_[i]; k < row_starts_[i + 1]; ++k) {
        const Index j = col_indices_[k];
        if (j == i) {
          has_diag[i] = true;
          diag_[i] = values_[k];
          diag_pos_[i] = k;
          continue;
        }
        const auto cols = row_cols(j);
        const auto it = std::lower_bound(cols.begin(), cols.end(), i);
        if (it == cols.end() || *it != i) {
          throw std::invalid_argument("SparseSymMatrix: pattern is not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
        if (row_values(j)[static_cast<std::size_t>(it - cols.begin())] != values_[k]) {
          throw std::invalid_argument("SparseSymMatrix: values are not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
        }
      }
    }
    for (Index i = 0; i < n_; ++i) {
      if (!has_diag[i] || !(diag_[i] > 0.0)) {
        throw std::invalid_argument("SparseSymMatrix: positive diagonal required (row " +
                                    std::to_string(i) + ")");
      }
    }
  }

  Index n_ = 0;
  std::vector<Index> row_starts_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
  std::vector<double> diag_;
  std::vector<Index> diag_pos_;
};

/// y = A x, each row summed in ascending column order.
inline void matvec_into(const SparseSymMatrix& a, std::span<const double> x, std::span<double> y) {
  require_size(x.size(), a.n(), "matvec");
  require_size(y.size(), a.n(), "matvec");
  for (Index i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double s = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) s += vals[k] * x[cols[k]];
    y[i] = s;
  }
}

inline Vector matvec(const SparseSymMatrix& a, std::span<const double> x) {
  Vector y(a.n());
  matvec_into(a, x, y);
  return y;
}

/// Requirements on a matrix that normal SOR can sweep column by column:
/// the squared column norms, a column/residual inner product, and a column
/// axpy into the residual, plus the full forward and adjoint products.
template <class Op>
concept ColumnAction = requires(const Op& op, Index j, std::span<const double> cv, std::span<double> v, double a) {
  { op.rows() } -> std::convertible_to<std::size_t>;
  { op.cols() } -> std::convertible_to<std::size_t>;
  { op.col_sq_norm(j) } -> std::convertible_to<double>;
  { op.col_dot(j, cv) } -> std::convertible_to<double>;
  op.col_axpy(j, a, v);
  { op.apply(cv) } -> std::convertible_to<Vector>;
  { op.apply_transpose(cv) } -> std::convertible_to<Vector>;
};

/// General sparse matrix C stored by columns, with cached squared column norms.
class ColumnOperator {
 public:
  ColumnOperator() = default;

  static ColumnOperator from_entries(Index rows, Index cols, std::vector<Entry> entries) {
    for (const auto& e : entries) {
      if (e.row >= rows || e.col >= cols) throw std::invalid_argument("ColumnOperator: index out of range");
      if (!std::isfinite(e.value)) throw std::invalid_argument("ColumnOperator: non-finite value");
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    ColumnOperator c;
    c.rows_ = rows;
    c.cols_ = cols;
    c.col_starts_.assign(cols + 1, 0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
      if (k > 0 && entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col) {
        throw std::invalid_argument("ColumnOperator: duplicate entry");
      }
      ++c.col_starts_[entries[k].col + 1];
      c.row_indices_.push_back(entries[k].row);
      c.values_.push_back(entries[k].value);
    }
    for (Index j = 0; j < cols; ++j) c.col_starts_[j + 1] += c.col_starts_[j];
    c.col_sq_norms_.assign(cols, 0.0);
    for (Index j = 0; j < cols; ++j) {
      double s = 0.0;
      for (Index k = c.col_starts_[j]; k < c.col_starts_[j + 1]; ++k) s += c.values_[k] * c.values_[k];
      if (!(s > 0.0)) throw std::invalid_argument("ColumnOperator: zero column " + std::to_string(j));
      c.col_sq_norms_[j] = s;
    }
    return c;
  }

  /// Row-major dense input; exact zeros are dropped.
  static ColumnOperator from_dense(Index rows, Index cols, std::span<const double> dense) {
    require_size(dense.size(), rows * cols, "ColumnOperator::from_dense");
    std::vector<Entry> entries;
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        if (dense[i * cols + j] != 0.0) entries.push_back({i, j, dense[i * cols + j]});
      }
    }
    return from_entries(rows, cols, std::move(entries));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }
  double col_sq_norm(Index j) const { return col_sq_norms_[j]; }
  std::span<const double> col_sq_norms() const noexcept { return col_sq_norms_; }

  std::span<const Index> col_rows(Index j) const {
    return {row_indices_.data() + col_starts_[j], col_starts_[j + 1] - col_starts_[j]};
  }
  std::span<const double> col_values(Index j) const {
    return {values_.data() + col_starts_[j], col_starts_[j + 1] - col_starts_[j]};
  }

  double col_dot(Index j, std::span<const double> r) const {
    const auto rows = col_rows(j);
    const auto vals = col_values(j);
    double s = 0.0;
    for (std::size_t k = 0; k < rows.size(); ++k) s += vals[k] * r[rows[k]];
    return s;
  }

  void col_axpy(Index j, double alpha, std::span<double> r) const {
    const auto rows = col_rows(j);
    const auto vals = col_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) r[rows[k]] += alpha * vals[k];
  }

  Vector apply(std::span<const double> x) const {
    require_size(x.size(), cols_, "ColumnOperator::apply");
    Vector y(rows_, 0.0);
    for (Index j = 0; j < cols_; ++j) {
      if (x[j] != 0.0) col_axpy(j, x[j], y);
    }
    return y;
  }

  Vector apply_transpose(std::span<const double> r) const {
    require_size(r.size(), rows_, "ColumnOperator::apply_transpose");
    Vector y(cols_);
    for (Index j = 0; j < cols_; ++j) y[j] = col_dot(j, r);
    return y;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> col_starts_{0};
  std::vector<Index> row_indices_;
  std::vector<double> values_;
  std::vector<double> col_sq_norms_;
};

static_assert(ColumnAction<ColumnOperator>);

/// C^T (C x) without forming C^T C.
template <ColumnAction Op>
Vector normal_matvec(const Op& c, std::span<const double> x) {
  require_size(x.size(), c.cols(), "normal_matvec");
  return c.apply_transpose(c.apply(x));
}

/// Explicit C^T C. Only sensible for small operators; fill can be large.
inline SparseSymMatrix build_explicit_normal(const ColumnOperator& c) {
  if (c.cols() == 0) throw std::invalid_argument("build_explicit_normal: operator has no columns");
  std::vector<Entry> entries;
  Vector scratch(c.rows(), 0.0);
  for (Index j = 0; j < c.cols(); ++j) {
    c.col_axpy(j, 1.0, scratch);
    for (Index i = 0; i < c.cols(); ++i) {
      if (i == j) {
        entries.push_back({j, j, c.col_sq_norm(j)});
        continue;
      }
      const double v = c.col_dot(i, scratch);
      if (v != 0.0) entries.push_back({j, i, v});
    }
    for (const Index r : c.col_rows(j)) scratch[r] = 0.0;
  }
  // col_dot(i, c_j) and col_dot(j, c_i) accumulate in the same row order,
  // so the two triangles agree bit for bit.
  return SparseSymMatrix::from_entries(c.cols(), std::move(entries));
}

}  // namespace nqpsor

#endif  // NQPSOR_LINALG_HPP
