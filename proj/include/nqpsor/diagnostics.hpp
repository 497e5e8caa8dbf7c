#ifndef NQPSOR_DIAGNOSTICS_HPP
#define NQPSOR_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqpsor/linalg.hpp"
#include "nqpsor/model.hpp"

namespace nqpsor {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-iteration record of a solve. Row k describes the sweep that produced
/// x^(k+1) from x^(k): the step length, V(x^(k+1)), the relaxation parameter
/// and step size used, the decrement d = log10(step) and its slope s.
///
/// d is -inf when the step is exactly zero; s is NaN on the first row and
/// whenever either decrement is non-finite. kkt_residual is NaN on rows
/// where it was not sampled.
class IterationTrace {
 public:
  void push(double delta_norm, double objective, double omega, double h,
            double kkt = kNaN, std::string event = {}) {
    const double d = delta_norm > 0.0 ? std::log10(delta_norm) : -std::numeric_limits<double>::infinity();
    double s = kNaN;
    if (!decrement_.empty() && std::isfinite(d) && std::isfinite(decrement_.back())) s = d - decrement_.back();
    delta_norm_.push_back(delta_norm);
    objective_.push_back(objective);
    omega_.push_back(omega);
    h_.push_back(h);
    kkt_.push_back(kkt);
    decrement_.push_back(d);
    slope_.push_back(s);
    event_.push_back(std::move(event));
  }

  /// Appends another trace; the first appended row gets `event` if it has none.
  void append(const IterationTrace& other, const std::string& event) {
    for (std::size_t k = 0; k < other.size(); ++k) {
      std::string ev = other.event_[k];
      if (k == 0 && ev.empty()) ev = event;
      push(other.delta_norm_[k], other.objective_[k], other.omega_[k], other.h_[k], other.kkt_[k], ev);
      if (k == 0) slope_.back() = kNaN;  // slopes do not cross stage boundaries
    }
  }

  void set_event(std::size_t k, std::string event) { event_.at(k) = std::move(event); }
  void set_kkt(std::size_t k, double value) { kkt_.at(k) = value; }
  void set_slope(std::size_t k, double value) { slope_.at(k) = value; }

  std::size_t size() const noexcept { return delta_norm_.size(); }
  bool empty() const noexcept { return delta_norm_.empty(); }

  std::span<const double> delta_norm() const noexcept { return delta_norm_; }
  std::span<const double> objective() const noexcept { return objective_; }
  std::span<const double> omega() const noexcept { return omega_; }
  std::span<const double> h() const noexcept { return h_; }
  std::span<const double> kkt_residual() const noexcept { return kkt_; }
  std::span<const double> decrement() const noexcept { return decrement_; }
  std::span<const double> slope() const noexcept { return slope_; }
  const std::vector<std::string>& events() const noexcept { return event_; }

 private:
  std::vector<double> delta_norm_;
  std::vector<double> objective_;
  std::vector<double> omega_;
  std::vector<double> h_;
  std::vector<double> kkt_;
  std::vector<double> decrement_;
  std::vector<double> slope_;
  std::vector<std::string> event_;
};

/// Optimality report for an NQP point, based on the projected-step
/// characterization: x is optimal iff clamp(x - alpha D^-1 (Ax - b)) == x
/// for some (equivalently all) alpha > 0. alpha = h / (1 + h/2).
struct KktReport {
  double residual_norm = 0.0;
  Vector slack;              // A x - b
  double complementarity = 0.0;  // x^T (A x - b)
  double min_slack = 0.0;
  double min_x = 0.0;
};

inline double kkt_alpha(double h) { return h / (1.0 + 0.5 * h); }

/// Builds the report from an already computed gradient A x - b and the
/// diagonal used for scaling.
inline KktReport kkt_from_gradient(std::span<const double> x, Vector slack, std::span<const double> diag,
                                   std::span<const double> lower, std::span<const double> upper, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("kkt_residual: h must be positive");
  require_size(slack.size(), x.size(), "kkt_residual");
  require_size(diag.size(), x.size(), "kkt_residual");
  const double alpha = kkt_alpha(h);
  KktReport rep;
  double sq = 0.0;
  rep.min_slack = kInfinity;
  rep.min_x = kInfinity;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double stepped = std::clamp(x[i] - alpha * slack[i] / diag[i], lower[i], upper[i]);
    const double r = stepped - x[i];
    sq += r * r;
    rep.complementarity += x[i] * slack[i];
    rep.min_slack = std::min(rep.min_slack, slack[i]);
    rep.min_x = std::min(rep.min_x, x[i]);
  }
  rep.residual_norm = std::sqrt(sq);
  rep.slack = std::move(slack);
  return rep;
}

inline KktReport kkt_residual(const NqpProblem& p, std::span<const double> x, double h = 2.0) {
  require_size(x.size(), p.n(), "kkt_residual");
  return kkt_from_gradient(x, gradient(p, x), p.matrix().diagonal(), p.lower(), p.upper(), h);
}

/// The same report for a least squares problem, with A = C^T C, b = C^T d.
template <ColumnAction Op>
KktReport kkt_residual(const BasicNnlsProblem<Op>& q, std::span<const double> x, double h = 2.0) {
  require_size(x.size(), q.n(), "kkt_residual");
  Vector r = q.op().apply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= q.data()[i];
  Vector diag(q.n());
  for (Index j = 0; j < q.n(); ++j) diag[j] = q.op().col_sq_norm(j);
  return kkt_from_gradient(x, q.op().apply_transpose(r), diag, q.lower(), q.upper(), h);
}

/// Rounding allowance used by every dissipation check.
inline double dissipation_slack(double v_old) { return 1e-10 * (1.0 + std::abs(v_old)); }

/// True iff V_new - V_old <= -(min_diag / h) * delta_norm^2 + slack.
inline bool check_dissipation(double v_new, double v_old, double delta_norm, double h, double min_diag) {
  const double gamma = min_diag / h;
  return v_new - v_old <= -gamma * delta_norm * delta_norm + dissipation_slack(v_old);
}

struct DecrementStats {
  double s_bar;
  double omega_bar;
};

/// Windowed statistics at trace row k with window m:
///   s_bar     = (d[k] - d[k-m]) / m
///   omega_bar = mean(omega[k-m .. k])   (m + 1 values)
/// Row j's omega is the parameter that produced d[j], so the omega window
/// covers exactly the sweeps spanned by the decrement window.
inline DecrementStats decrement_stats(std::span<const double> decrement, std::span<const double> omega,
                                      std::size_t k, std::size_t m) {
  if (m == 0) throw std::invalid_argument("decrement_stats: m must be positive");
  if (k < m || k >= decrement.size() || k >= omega.size()) {
    throw std::out_of_range("decrement_stats: insufficient history");
  }
  if (!std::isfinite(decrement[k]) || !std::isfinite(decrement[k - m])) {
    throw std::domain_error("decrement_stats: zero step inside the window");
  }
  double sum = 0.0;
  for (std::size_t j = k - m; j <= k; ++j) sum += omega[j];
  return {(decrement[k] - decrement[k - m]) / static_cast<double>(m), sum / static_cast<double>(m + 1)};
}

inline DecrementStats decrement_stats(const IterationTrace& trace, std::size_t k, std::size_t m) {
  return decrement_stats(trace.decrement(), trace.omega(), k, m);
}

}  // namespace nqpsor

#endif  // NQPSOR_DIAGNOSTICS_HPP
