#ifndef NQPSOR_MODEL_HPP
#define NQPSOR_MODEL_HPP

// Problem definitions:
//
//   NQP   minimize 1/2 x^T A x - x^T b   subject to lower <= x <= upper
//   NNLS  minimize ||C x - d||^2         subject to lower <= x <= upper
//
// The default box is [0, +inf), i.e. plain nonnegativity.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <utility>

#include "nqpsor/linalg.hpp"

namespace nqpsor {

namespace detail {

inline void validate_box(std::span<const double> lower, std::span<const double> upper, std::size_t n) {
  require_size(lower.size(), n, "box lower");
  require_size(upper.size(), n, "box upper");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(lower[i])) throw std::invalid_argument("box: lower bounds must be finite");
    if (std::isnan(upper[i]) || upper[i] < lower[i]) throw std::invalid_argument("box: lower > upper");
  }
}

}  // namespace detail

/// Clamp of x onto [lower, upper], componentwise.
inline Vector project_box(std::span<const double> x, std::span<const double> lower,
                          std::span<const double> upper) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], lower[i], upper[i]);
  return out;
}

class NqpProblem {
 public:
  NqpProblem(SparseSymMatrix a, Vector b)
      : NqpProblem(std::move(a), std::move(b), Vector{}, Vector{}) {}

  /// Empty bound vectors select the defaults (0 and +inf).
  NqpProblem(SparseSymMatrix a, Vector b, Vector lower, Vector upper)
      : a_(std::move(a)), b_(std::move(b)), lower_(std::move(lower)), upper_(std::move(upper)) {
    require_size(b_.size(), a_.n(), "NqpProblem b");
    if (!all_finite(b_)) throw std::invalid_argument("NqpProblem: b must be finite");
    if (lower_.empty()) lower_.assign(a_.n(), 0.0);
    if (upper_.empty()) upper_.assign(a_.n(), kInfinity);
    detail::validate_box(lower_, upper_, a_.n());
  }

  const SparseSymMatrix& matrix() const noexcept { return a_; }
  std::span<const double> rhs() const noexcept { return b_; }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  Index n() const noexcept { return a_.n(); }

  /// The projection of the zero vector onto the box.
  Vector default_start() const {
    const Vector zero(n(), 0.0);
    return project_box(zero, lower_, upper_);
  }

  bool contains(std::span<const double> x) const {
    if (x.size() != n()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!(x[i] >= lower_[i] && x[i] <= upper_[i])) return false;
    }
    return true;
  }

 private:
  SparseSymMatrix a_;
  Vector b_;
  Vector lower_;
  Vector upper_;
};

/// Least squares data for normal SOR. Any ColumnAction works as C.
template <ColumnAction Op>
class BasicNnlsProblem {
 public:
  BasicNnlsProblem(Op c, Vector d) : BasicNnlsProblem(std::move(c), std::move(d), Vector{}, Vector{}) {}

  BasicNnlsProblem(Op c, Vector d, Vector lower, Vector upper)
      : c_(std::move(c)), d_(std::move(d)), lower_(std::move(lower)), upper_(std::move(upper)) {
    require_size(d_.size(), c_.rows(), "NnlsProblem d");
    if (!all_finite(d_)) throw std::invalid_argument("NnlsProblem: d must be finite");
    if (lower_.empty()) lower_.assign(c_.cols(), 0.0);
    if (upper_.empty()) upper_.assign(c_.cols(), kInfinity);
    detail::validate_box(lower_, upper_, c_.cols());
  }

  const Op& op() const noexcept { return c_; }
  std::span<const double> data() const noexcept { return d_; }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }
  Index n() const noexcept { return c_.cols(); }

  Vector default_start() const {
    const Vector zero(n(), 0.0);
    return project_box(zero, lower_, upper_);
  }

 private:
  Op c_;
  Vector d_;
  Vector lower_;
  Vector upper_;
};

using NnlsProblem = BasicNnlsProblem<ColumnOperator>;

/// V(x) = 1/2 x^T A x - x^T b.
inline double objective(const NqpProblem& p, std::span<const double> x) {
  require_size(x.size(), p.n(), "objective");
  const Vector ax = matvec(p.matrix(), x);
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    quad += x[i] * ax[i];
    lin += x[i] * p.rhs()[i];
  }
  return 0.5 * quad - lin;
}

/// grad V(x) = A x - b.
inline Vector gradient(const NqpProblem& p, std::span<const double> x) {
  require_size(x.size(), p.n(), "gradient");
  Vector g = matvec(p.matrix(), x);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= p.rhs()[i];
  return g;
}

/// The problem with A replaced by A + sigma I; b and the box are unchanged.
inline NqpProblem shift(const NqpProblem& p, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("shift: sigma must be positive");
  return NqpProblem(p.matrix().shifted(sigma), Vector(p.rhs().begin(), p.rhs().end()),
                    Vector(p.lower().begin(), p.lower().end()), Vector(p.upper().begin(), p.upper().end()));
}

/// The shift used when none is given: the smallest diagonal entry of A.
inline double auto_shift(const NqpProblem& p) { return p.matrix().min_diag(); }

/// A = C^T C, b = C^T d, box copied from q.
inline NqpProblem nnls_to_nqp(const NnlsProblem& q) {
  return NqpProblem(build_explicit_normal(q.op()), q.op().apply_transpose(q.data()),
                    Vector(q.lower().begin(), q.lower().end()), Vector(q.upper().begin(), q.upper().end()));
}

/// ||C x - d||_2.
template <ColumnAction Op>
double residual_norm(const BasicNnlsProblem<Op>& q, std::span<const double> x) {
  Vector r = q.op().apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= q.data()[i];
  return norm2(r);
}

}  // namespace nqpsor

#endif  // NQPSOR_MODEL_HPP
