#ifndef NQPSOR_SOLVERS_HPP
#define NQPSOR_SOLVERS_HPP

// Projected SOR and its adaptive variants.
//
// Every scheme shares one sweep: for i = 1..n in order,
//
//   xhat_i = (1 - w) x_i + (w / a_ii) (b_i - sum_{j != i} a_ij x_j)
//   x_i    = clamp(xhat_i, lower_i, upper_i)
//
// where x_j already holds the new value for j < i. The relaxation parameter
// w in (0, 2) corresponds to the step size h = 2w / (2 - w) > 0 of an
// equivalent coordinate-wise discrete gradient scheme, which is why every
// sweep decreases V by at least (a_ii / h) (dx_i)^2 per coordinate. The
// adaptive solvers control h and derive w from it.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nqpsor/diagnostics.hpp"
#include "nqpsor/linalg.hpp"
#include "nqpsor/model.hpp"

namespace nqpsor {

inline double h_to_omega(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h_to_omega: h must be positive");
  return 2.0 * h / (2.0 + h);
}

inline double omega_to_h(double omega) {
  if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("omega_to_h: omega must lie in (0, 2)");
  return 2.0 * omega / (2.0 - omega);
}

/// A step size with its relaxation parameter. h is canonical.
class StepSize {
 public:
  static StepSize from_h(double h) { return StepSize(h, h_to_omega(h)); }
  static StepSize from_omega(double omega) { return StepSize(omega_to_h(omega), omega); }

  double h() const noexcept { return h_; }
  double omega() const noexcept { return omega_; }

 private:
  StepSize(double h, double omega) : h_(h), omega_(omega) {}
  double h_;
  double omega_;
};

/// Parameters of the Armijo / curvature step-size control and the
/// safeguard interval (eps_omega, max_omega) outside which h resets to 2.
struct WolfeParams {
  double c1 = 0.89;
  double c2 = 0.95;
  double lambda1 = 1.15;
  double lambda2 = 1.4;
  double rho = 0.85;
  double eps_omega = 0.05;
  double max_omega = 1.99;

  void validate() const {
    if (!(c1 > 0.0 && c1 < 1.0)) throw std::invalid_argument("WolfeParams: c1 must lie in (0, 1)");
    if (!(c2 > c1 && c2 < 1.0)) throw std::invalid_argument("WolfeParams: c2 must lie in (c1, 1)");
    if (!(lambda1 > 1.0)) throw std::invalid_argument("WolfeParams: lambda1 must exceed 1");
    if (!(lambda2 > lambda1)) throw std::invalid_argument("WolfeParams: lambda2 must exceed lambda1");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("WolfeParams: rho must lie in (0, 1)");
    if (!(eps_omega > 0.0 && eps_omega < 2.0)) throw std::invalid_argument("WolfeParams: eps_omega must lie in (0, 2)");
    if (!(max_omega > eps_omega && max_omega < 2.0)) {
      throw std::invalid_argument("WolfeParams: max_omega must lie in (eps_omega, 2)");
    }
  }
};

/// Called after every sweep with the 1-based iteration number and x^(k).
using IterateObserver = std::function<void(std::size_t, std::span<const double>)>;

struct SolverConfig {
  double tolerance = 1e-10;  // on ||x^(k+1) - x^(k)||_2
  std::size_t max_iterations = 100000;
  WolfeParams wolfe;
  std::size_t freeze_m = 10;
  double freeze_threshold = -2.0;
  std::optional<double> shift_sigma;  // empty: min(diag(A))
  bool record_trace = false;
  std::size_t kkt_every = 10;  // trace sampling period, 0 disables sampling
  bool componentwise_check = false;
  IterateObserver observer;

  void validate() const {
    if (!(tolerance > 0.0)) throw std::invalid_argument("SolverConfig: tolerance must be positive");
    if (max_iterations == 0) throw std::invalid_argument("SolverConfig: max_iterations must be positive");
    if (freeze_m == 0) throw std::invalid_argument("SolverConfig: freeze_m must be at least 1");
    if (shift_sigma && !(*shift_sigma > 0.0)) throw std::invalid_argument("SolverConfig: shift_sigma must be positive");
    wolfe.validate();
  }
};

enum class Status { Converged, MaxIterations };

inline const char* to_string(Status s) { return s == Status::Converged ? "converged" : "max_iterations"; }

struct SolveResult {
  Vector x;
  Status status = Status::MaxIterations;
  std::size_t iterations = 0;
  std::optional<IterationTrace> trace;
  std::optional<double> frozen_omega;
  std::optional<std::size_t> shift_iterations;
  std::optional<double> shift_sigma;
  double final_kkt_residual = 0.0;
  std::size_t dissipation_violations = 0;
  std::size_t componentwise_violations = 0;
  std::size_t resets = 0;
  bool cycle_detected = false;
};

/// Raised when an iterate stops being finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

namespace detail {

inline void require_omega(double omega) {
  if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("relaxation parameter must lie in (0, 2)");
}

struct SweepStats {
  double delta_sq = 0.0;
  std::size_t cw_violations = 0;
};

/// In-place projected sweep over the rows of `a`. When `ax` is non-empty it
/// receives A * x_new, assembled from the row sums of this sweep plus
/// symmetric corrections for later coordinates; no extra product with A is
/// needed. With `cw_h` > 0 every coordinate update is checked against the
/// component-wise decrease (a_ii / h) dx_i^2.
inline SweepStats projected_sweep(const SparseSymMatrix& a, std::span<const double> b,
                                  std::span<const double> lower, std::span<const double> upper,
                                  std::span<double> x, double omega, std::span<double> ax = {},
                                  double cw_h = 0.0, double v_start = 0.0) {
  SweepStats st;
  const bool track = !ax.empty();
  double v_running = v_start;
  for (Index i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double sum = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] != i) sum += vals[k] * x[cols[k]];
    }
    const double aii = a.diag(i);
    const double old = x[i];
    const double xhat = (1.0 - omega) * old + (omega / aii) * (b[i] - sum);
    const double fresh = std::clamp(xhat, lower[i], upper[i]);
    x[i] = fresh;
    const double delta = fresh - old;
    st.delta_sq += delta * delta;
    if (track) {
      ax[i] = sum + aii * fresh;
      if (delta != 0.0) {
        for (std::size_t k = 0; k < cols.size() && cols[k] < i; ++k) ax[cols[k]] += vals[k] * delta;
      }
    }
    if (cw_h > 0.0) {
      const double dv = delta * (sum + aii * old - b[i]) + 0.5 * aii * delta * delta;
      if (dv > -(aii / cw_h) * delta * delta + dissipation_slack(v_running)) ++st.cw_violations;
      v_running += dv;
    }
  }
  return st;
}

/// What a driver needs to know about one sweep.
struct SweepOutcome {
  double delta_norm = 0.0;
  double v_old = 0.0;
  double v_new = 0.0;
  double grad_old_dot_step = 0.0;  // grad V(x_old) . (x_new - x_old)
  double grad_new_dot_step = 0.0;  // grad V(x_new) . (x_new - x_old)
  std::size_t cw_violations = 0;
};

/// Sweeps an explicit NQP while maintaining A x, so that V and the Wolfe
/// inner products come without further matrix-vector products.
class ExplicitStepper {
 public:
  ExplicitStepper(const NqpProblem& p, Vector x0) : p_(p), x_(std::move(x0)) {
    require_size(x_.size(), p.n(), "initial guess");
    if (!p.contains(x_)) throw std::invalid_argument("initial guess must lie in the box");
    ax_ = matvec(p.matrix(), x_);
    ax_old_.resize(x_.size());
    x_old_.resize(x_.size());
    v_ = value(x_, ax_);
  }

  SweepOutcome sweep(double omega, double h, bool cw_check) {
    x_old_ = x_;
    ax_old_.swap(ax_);
    const SweepStats st = projected_sweep(p_.matrix(), p_.rhs(), p_.lower(), p_.upper(), x_, omega, ax_,
                                          cw_check ? h : 0.0, v_);
    SweepOutcome o;
    o.delta_norm = std::sqrt(st.delta_sq);
    o.cw_violations = st.cw_violations;
    o.v_old = v_;
    v_ = value(x_, ax_);
    o.v_new = v_;
    const auto b = p_.rhs();
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double dx = x_[i] - x_old_[i];
      o.grad_old_dot_step += (ax_old_[i] - b[i]) * dx;
      o.grad_new_dot_step += (ax_[i] - b[i]) * dx;
    }
    return o;
  }

  std::span<const double> x() const noexcept { return x_; }
  Vector take_x() { return std::move(x_); }
  double objective() const noexcept { return v_; }
  double min_diag() const { return p_.matrix().min_diag(); }

  /// Residual from the maintained product; used for cheap trace sampling.
  double sampled_kkt(double h) const {
    Vector slack(ax_);
    for (std::size_t i = 0; i < slack.size(); ++i) slack[i] -= p_.rhs()[i];
    return kkt_from_gradient(x_, std::move(slack), p_.matrix().diagonal(), p_.lower(), p_.upper(), h)
        .residual_norm;
  }

  double final_kkt() const { return kkt_residual(p_, x_).residual_norm; }

 private:
  double value(std::span<const double> x, std::span<const double> ax) const {
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      quad += x[i] * ax[i];
      lin += x[i] * p_.rhs()[i];
    }
    return 0.5 * quad - lin;
  }

  const NqpProblem& p_;
  Vector x_;
  Vector x_old_;
  Vector ax_;
  Vector ax_old_;
  double v_ = 0.0;
};

/// Normal SOR on min ||Cx - d||^2: the residual r = d - Cx is kept current
/// and each coordinate touches only its own column of C. V is reported as
/// 1/2 ||r||^2 - 1/2 ||d||^2, the NQP objective for A = C^T C, b = C^T d.
template <ColumnAction Op>
class NormalStepper {
 public:
  NormalStepper(const BasicNnlsProblem<Op>& q, Vector x0) : q_(q), x_(std::move(x0)) {
    require_size(x_.size(), q.n(), "initial guess");
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!(x_[i] >= q.lower()[i] && x_[i] <= q.upper()[i])) {
        throw std::invalid_argument("initial guess must lie in the box");
      }
    }
    col_norms_.resize(q.n());
    for (Index j = 0; j < q.n(); ++j) col_norms_[j] = q.op().col_sq_norm(j);
    r_ = q.op().apply(x_);
    for (std::size_t i = 0; i < r_.size(); ++i) r_[i] = q.data()[i] - r_[i];
    half_d_sq_ = 0.5 * dot(q.data(), q.data());
    v_ = 0.5 * dot(r_, r_) - half_d_sq_;
  }

  SweepOutcome sweep(double omega, double h, bool cw_check) {
    r_old_ = r_;
    const auto& op = q_.op();
    const auto lower = q_.lower();
    const auto upper = q_.upper();
    double delta_sq = 0.0;
    double v_running = v_;
    SweepOutcome o;
    for (Index i = 0; i < x_.size(); ++i) {
      const double c2 = col_norms_[i];
      const double g = op.col_dot(i, r_);
      const double old = x_[i];
      const double xhat = (1.0 - omega) * old + omega * (old + g / c2);
      const double fresh = std::clamp(xhat, lower[i], upper[i]);
      const double delta = fresh - old;
      x_[i] = fresh;
      if (delta != 0.0) op.col_axpy(i, -delta, r_);
      delta_sq += delta * delta;
      if (cw_check) {
        const double dv = -delta * g + 0.5 * c2 * delta * delta;
        if (dv > -(c2 / h) * delta * delta + dissipation_slack(v_running)) ++o.cw_violations;
        v_running += dv;
      }
    }
    o.delta_norm = std::sqrt(delta_sq);
    o.v_old = v_;
    v_ = 0.5 * dot(r_, r_) - half_d_sq_;
    o.v_new = v_;
    // C dx = r_old - r_new and grad V = -C^T r.
    for (std::size_t k = 0; k < r_.size(); ++k) {
      const double cdx = r_old_[k] - r_[k];
      o.grad_old_dot_step -= r_old_[k] * cdx;
      o.grad_new_dot_step -= r_[k] * cdx;
    }
    return o;
  }

  std::span<const double> x() const noexcept { return x_; }
  Vector take_x() { return std::move(x_); }
  double objective() const noexcept { return v_; }
  double min_diag() const { return *std::min_element(col_norms_.begin(), col_norms_.end()); }

  double sampled_kkt(double h) const {
    Vector slack = q_.op().apply_transpose(r_);
    for (double& s : slack) s = -s;
    return kkt_from_gradient(x_, std::move(slack), col_norms_, q_.lower(), q_.upper(), h).residual_norm;
  }

  double final_kkt() const { return kkt_residual(q_, x_).residual_norm; }

 private:
  const BasicNnlsProblem<Op>& q_;
  Vector x_;
  Vector r_;
  Vector r_old_;
  Vector col_norms_;
  double half_d_sq_ = 0.0;
  double v_ = 0.0;
};

/// Runs sweeps on a stepper and does the bookkeeping shared by all solvers:
/// stopping test, iteration cap, finiteness, dissipation counting, trace.
template <class Stepper>
class Driver {
 public:
  Driver(Stepper& stepper, const SolverConfig& cfg) : s_(stepper), cfg_(cfg), min_diag_(stepper.min_diag()) {
    if (cfg.record_trace) trace_.emplace();
  }

  SweepOutcome step(double omega, double h, std::string event = {}) {
    const SweepOutcome o = s_.sweep(omega, h, cfg_.componentwise_check);
    ++iterations_;
    if (!std::isfinite(o.delta_norm) || !std::isfinite(o.v_new)) {
      throw NumericalError("non-finite iterate", iterations_);
    }
    if (!check_dissipation(o.v_new, o.v_old, o.delta_norm, h, min_diag_)) ++dissipation_violations_;
    cw_violations_ += o.cw_violations;
    decrement_.push_back(o.delta_norm > 0.0 ? std::log10(o.delta_norm) : -kInfinity);
    omega_.push_back(omega);
    last_h_ = h;
    if (o.delta_norm <= cfg_.tolerance) converged_ = true;
    if (trace_) {
      double kkt = kNaN;
      if (cfg_.kkt_every > 0 && iterations_ % cfg_.kkt_every == 0) kkt = s_.sampled_kkt(2.0);
      trace_->push(o.delta_norm, o.v_new, omega, h, kkt, std::move(event));
    }
    if (cfg_.observer) cfg_.observer(iterations_, s_.x());
    return o;
  }

  bool converged() const noexcept { return converged_; }
  bool done() const noexcept { return converged_ || iterations_ >= cfg_.max_iterations; }
  std::size_t iterations() const noexcept { return iterations_; }
  std::span<const double> decrements() const noexcept { return decrement_; }
  std::span<const double> omegas() const noexcept { return omega_; }
  double last_decrement() const { return decrement_.empty() ? 0.0 : decrement_.back(); }

  SolveResult finish() {
    SolveResult r;
    r.status = converged_ ? Status::Converged : Status::MaxIterations;
    r.iterations = iterations_;
    r.dissipation_violations = dissipation_violations_;
    r.componentwise_violations = cw_violations_;
    r.final_kkt_residual = s_.final_kkt();
    if (trace_) {
      if (!trace_->empty() && std::isnan(trace_->kkt_residual().back())) {
        trace_->set_kkt(trace_->size() - 1, r.final_kkt_residual);
      }
      r.trace = std::move(trace_);
    }
    r.x = s_.take_x();
    return r;
  }

 private:
  Stepper& s_;
  const SolverConfig& cfg_;
  double min_diag_;
  std::size_t iterations_ = 0;
  std::size_t dissipation_violations_ = 0;
  std::size_t cw_violations_ = 0;
  bool converged_ = false;
  double last_h_ = 2.0;
  std::vector<double> decrement_;
  std::vector<double> omega_;
  std::optional<IterationTrace> trace_;
};

}  // namespace detail

/// Next step size from the Armijo and curvature tests:
/// Armijo fails -> rho h; both hold -> lambda1 h; curvature fails -> lambda2 h.
inline double wolfe_update(double h, double v_new, double v_old, double g_old_dot_dx, double g_new_dot_dx,
                           const WolfeParams& wp) {
  if (v_new <= v_old + wp.c1 * g_old_dot_dx) {
    if (wp.c2 * g_old_dot_dx <= g_new_dot_dx) return wp.lambda1 * h;
    return wp.lambda2 * h;
  }
  return wp.rho * h;
}

namespace detail {

/// Step-size state of the Wolfe-controlled iteration.
class WolfeControl {
 public:
  explicit WolfeControl(const WolfeParams& wp) : wp_(wp) {}

  double h() const noexcept { return h_; }
  double omega() const { return h_to_omega(h_); }

  /// Updates h from the last sweep. Returns true when the safeguard reset
  /// (h, omega) to (2, 1).
  bool update(const SweepOutcome& o) {
    if (o.delta_norm == 0.0) {
      h_ *= wp_.lambda1;
    } else {
      h_ = wolfe_update(h_, o.v_new, o.v_old, o.grad_old_dot_step, o.grad_new_dot_step, wp_);
    }
    const double w = h_to_omega(h_);
    if (!(w > wp_.eps_omega && w < wp_.max_omega)) {
      h_ = 2.0;
      return true;
    }
    return false;
  }

 private:
  const WolfeParams& wp_;
  double h_ = 2.0;
};

template <class Stepper>
SolveResult run_fixed(Stepper& s, double omega, const SolverConfig& cfg) {
  require_omega(omega);
  cfg.validate();
  const double h = omega_to_h(omega);
  Driver<Stepper> drv(s, cfg);
  while (!drv.done()) drv.step(omega, h);
  return drv.finish();
}

template <class Stepper>
SolveResult run_wolfe(Stepper& s, const SolverConfig& cfg) {
  cfg.validate();
  Driver<Stepper> drv(s, cfg);
  WolfeControl ctl(cfg.wolfe);
  std::size_t resets = 0;
  std::string event;
  while (!drv.done()) {
    const SweepOutcome o = drv.step(ctl.omega(), ctl.h(), std::move(event));
    event.clear();
    if (drv.done()) break;
    if (ctl.update(o)) {
      ++resets;
      event = "reset";
    }
  }
  SolveResult r = drv.finish();
  r.resets = resets;
  return r;
}

/// Adaptive iterations until the mean decrement slope stops improving, then
/// plain sweeps with omega fixed at the windowed mean.
template <class Stepper>
SolveResult run_freeze(Stepper& s, const SolverConfig& cfg) {
  cfg.validate();
  Driver<Stepper> drv(s, cfg);
  WolfeControl ctl(cfg.wolfe);
  std::size_t resets = 0;
  std::string event;
  auto adaptive = [&] {
    const SweepOutcome o = drv.step(ctl.omega(), ctl.h(), std::move(event));
    event.clear();
    if (!drv.done() && ctl.update(o)) {
      ++resets;
      event = "reset";
    }
  };
  const std::size_t m = cfg.freeze_m;

  // Phase 1: until the step drops below 10^threshold.
  while (!drv.done() && drv.last_decrement() > cfg.freeze_threshold) adaptive();

  // Phase 2: fill the statistics window.
  if (!drv.done()) event = event.empty() ? "window" : event;
  for (std::size_t p = 0; p < m + 1 && !drv.done(); ++p) adaptive();

  // Phase 3: keep adapting while the mean slope does not increase.
  std::optional<double> frozen;
  while (!drv.done()) {
    const std::size_t k = drv.iterations() - 1;
    const DecrementStats now = decrement_stats(drv.decrements(), drv.omegas(), k, m);
    const DecrementStats before = decrement_stats(drv.decrements(), drv.omegas(), k - 1, m);
    if (now.s_bar > before.s_bar) {
      frozen = now.omega_bar;
      break;
    }
    adaptive();
  }

  // Phase 4: fixed omega.
  if (frozen) {
    const double h = omega_to_h(*frozen);
    event = "freeze";
    while (!drv.done()) {
      drv.step(*frozen, h, std::move(event));
      event.clear();
    }
  }
  SolveResult r = drv.finish();
  r.resets = resets;
  r.frozen_omega = frozen;
  return r;
}

inline Vector start_or_default(const NqpProblem& p, std::span<const double> x0) {
  return x0.empty() ? p.default_start() : Vector(x0.begin(), x0.end());
}

}  // namespace detail

struct SweepResult {
  Vector x;
  double delta_norm;
};

/// One projected SOR sweep from x.
inline SweepResult psor_sweep(const NqpProblem& p, std::span<const double> x, double omega) {
  detail::require_omega(omega);
  require_size(x.size(), p.n(), "psor_sweep");
  SweepResult r{Vector(x.begin(), x.end()), 0.0};
  const auto st = detail::projected_sweep(p.matrix(), p.rhs(), p.lower(), p.upper(), r.x, omega);
  r.delta_norm = std::sqrt(st.delta_sq);
  return r;
}

/// One unprojected SOR sweep for A x = b.
inline Vector sor_sweep(const SparseSymMatrix& a, std::span<const double> b, std::span<const double> x,
                        double omega) {
  require_size(b.size(), a.n(), "sor_sweep");
  require_size(x.size(), a.n(), "sor_sweep");
  const Vector lower(a.n(), -kInfinity);
  const Vector upper(a.n(), kInfinity);
  Vector out(x.begin(), x.end());
  detail::projected_sweep(a, b, lower, upper, out, omega);
  return out;
}

/// One step of the Itoh-Abe discrete gradient scheme with P = D^-1:
///
///   x_i' = -1 / (a_ii (1 + h/2)) * [ h sum_{j<i} a_ij x_j' - (1 - h/2) a_ii x_i
///                                    + h sum_{j>i} a_ij x_j - h b_i ]
///
/// No projection. Coincides with sor_sweep when h = 2w / (2 - w).
inline Vector itoh_abe_step(const SparseSymMatrix& a, std::span<const double> b, std::span<const double> x,
                            double h) {
  if (!(h > 0.0)) throw std::invalid_argument("itoh_abe_step: h must be positive");
  require_size(b.size(), a.n(), "itoh_abe_step");
  require_size(x.size(), a.n(), "itoh_abe_step");
  Vector out(x.begin(), x.end());
  for (Index i = 0; i < a.n(); ++i) {
    const auto cols = a.row_cols(i);
    const auto vals = a.row_values(i);
    double lower_sum = 0.0;
    double upper_sum = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] < i) lower_sum += vals[k] * out[cols[k]];
      else if (cols[k] > i) upper_sum += vals[k] * out[cols[k]];
    }
    const double aii = a.diag(i);
    out[i] = (-1.0 / (aii * (1.0 + 0.5 * h))) *
             (h * lower_sum - (1.0 - 0.5 * h) * aii * x[i] + h * upper_sum - h * b[i]);
  }
  return out;
}

/// Projected SOR with fixed omega.
inline SolveResult psor_solve(const NqpProblem& p, double omega, const SolverConfig& cfg,
                              std::span<const double> x0 = {}) {
  detail::require_omega(omega);
  detail::ExplicitStepper s(p, detail::start_or_default(p, x0));
  return detail::run_fixed(s, omega, cfg);
}

/// SOR sweep first, projection of the whole vector afterwards. This is not
/// a correct solver: its fixed points need not be optimal and V may
/// increase. A return to x^(k-1) with a step still above tolerance is
/// reported as a 2-cycle.
inline SolveResult naive_psor_solve(const NqpProblem& p, double omega, const SolverConfig& cfg,
                                    std::span<const double> x0 = {}) {
  detail::require_omega(omega);
  cfg.validate();
  for (const double l : p.lower()) {
    if (l != 0.0) throw std::invalid_argument("naive_psor_solve: requires lower bounds of zero");
  }
  Vector x = detail::start_or_default(p, x0);
  if (!p.contains(x)) throw std::invalid_argument("initial guess must lie in the box");
  const double h = omega_to_h(omega);
  const double min_diag = p.matrix().min_diag();
  SolveResult r;
  if (cfg.record_trace) r.trace.emplace();
  Vector previous;
  double v_old = objective(p, x);
  while (r.iterations < cfg.max_iterations) {
    Vector next = project_box(sor_sweep(p.matrix(), p.rhs(), x, omega), p.lower(), p.upper());
    ++r.iterations;
    const double delta = distance2(next, x);
    const double v_new = objective(p, next);
    if (!std::isfinite(delta) || !std::isfinite(v_new)) throw NumericalError("non-finite iterate", r.iterations);
    if (!check_dissipation(v_new, v_old, delta, h, min_diag)) ++r.dissipation_violations;
    const bool cycle = !previous.empty() && delta > cfg.tolerance && max_abs_diff(next, previous) <= 1e-14;
    if (r.trace) {
      double kkt = kNaN;
      if (cfg.kkt_every > 0 && r.iterations % cfg.kkt_every == 0) kkt = kkt_residual(p, next).residual_norm;
      r.trace->push(delta, v_new, omega, h, kkt, cycle ? "cycle" : "");
    }
    if (cfg.observer) cfg.observer(r.iterations, next);
    previous = std::move(x);
    x = std::move(next);
    v_old = v_new;
    if (delta <= cfg.tolerance) {
      r.status = Status::Converged;
      break;
    }
    if (cycle) {
      r.cycle_detected = true;
      break;
    }
  }
  r.final_kkt_residual = kkt_residual(p, x).residual_norm;
  r.x = std::move(x);
  return r;
}

/// Adaptive PSOR: h starts at 2 and is rescaled after each sweep by the
/// Armijo / curvature tests on that sweep; omega = 2h / (2 + h), reset to 1
/// whenever it leaves (eps_omega, max_omega).
inline SolveResult apsor_wolfe_solve(const NqpProblem& p, const SolverConfig& cfg,
                                     std::span<const double> x0 = {}) {
  detail::ExplicitStepper s(p, detail::start_or_default(p, x0));
  return detail::run_wolfe(s, cfg);
}

/// Adaptive PSOR that freezes omega at a windowed mean once the mean slope
/// of log10 ||dx|| stops improving.
inline SolveResult apsor_freeze_solve(const NqpProblem& p, const SolverConfig& cfg,
                                      std::span<const double> x0 = {}) {
  detail::ExplicitStepper s(p, detail::start_or_default(p, x0));
  return detail::run_freeze(s, cfg);
}

/// Adaptive PSOR started from the solution of the shifted problem
/// (A + sigma I). Iterations count both stages.
inline SolveResult apsor_shift_solve(const NqpProblem& p, const SolverConfig& cfg,
                                     std::span<const double> x0 = {}) {
  cfg.validate();
  const double sigma = cfg.shift_sigma.value_or(auto_shift(p));
  const NqpProblem shifted = shift(p, sigma);
  SolveResult first = apsor_wolfe_solve(shifted, cfg, x0);
  SolveResult second = apsor_wolfe_solve(p, cfg, first.x);
  second.shift_iterations = first.iterations;
  second.shift_sigma = sigma;
  second.iterations += first.iterations;
  second.dissipation_violations += first.dissipation_violations;
  second.componentwise_violations += first.componentwise_violations;
  second.resets += first.resets;
  if (first.trace && second.trace) {
    IterationTrace merged = std::move(*first.trace);
    if (!merged.empty() && merged.events().front().empty()) merged.set_event(0, "shifted");
    merged.append(*second.trace, "unshifted");
    second.trace = std::move(merged);
  }
  return second;
}

/// Relaxation choice for normal SOR.
struct RelaxationMode {
  enum class Kind { Fixed, Wolfe, Freeze };
  Kind kind = Kind::Wolfe;
  double omega = 1.0;

  static RelaxationMode fixed(double w) { return {Kind::Fixed, w}; }
  static RelaxationMode wolfe() { return {Kind::Wolfe, 1.0}; }
  static RelaxationMode freeze() { return {Kind::Freeze, 1.0}; }
};

/// Projected SOR on the normal equations C^T C x = C^T d without forming
/// C^T C. Produces the same iterates as psor_solve on nnls_to_nqp(q) up to
/// rounding.
template <ColumnAction Op>
SolveResult normal_psor_solve(const BasicNnlsProblem<Op>& q, RelaxationMode mode, const SolverConfig& cfg,
                              std::span<const double> x0 = {}) {
  Vector start = x0.empty() ? q.default_start() : Vector(x0.begin(), x0.end());
  detail::NormalStepper<Op> s(q, std::move(start));
  switch (mode.kind) {
    case RelaxationMode::Kind::Fixed:
      return detail::run_fixed(s, mode.omega, cfg);
    case RelaxationMode::Kind::Freeze:
      return detail::run_freeze(s, cfg);
    case RelaxationMode::Kind::Wolfe:
      break;
  }
  return detail::run_wolfe(s, cfg);
}

}  // namespace nqpsor

#endif  // NQPSOR_SOLVERS_HPP
