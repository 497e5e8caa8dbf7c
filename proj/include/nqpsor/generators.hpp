#ifndef NQPSOR_GENERATORS_HPP
#define NQPSOR_GENERATORS_HPP

// Random test problems with a prescribed spectrum and a known solution.
//
// Matrices start as diag(spectrum) and receive random Givens similarity
// rotations G^T A G until the requested density is reached. Rotations are
// orthogonal, so the eigenvalues are exactly the requested ones up to
// rounding. Right-hand sides are b = A x - y with x >= 0, y >= 0 on
// disjoint supports, so x satisfies the optimality conditions by
// construction.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqpsor/linalg.hpp"
#include "nqpsor/model.hpp"
#include "nqpsor/rng.hpp"

namespace nqpsor {

enum class SpectrumKind {
  Spd,            // linspace(1, kappa, n)
  SpsdFull,       // linspace(0, kappa, n)
  RankDeficient,  // zeros(n - rank - 1) ++ linspace(0, kappa, rank + 1)
};

struct GenSpec {
  Index n = 100;
  double density = 0.1;
  SpectrumKind spectrum = SpectrumKind::Spd;
  double kappa = 10.0;
  Index rank = 0;  // RankDeficient only
  std::uint64_t seed = 1;

  void validate() const {
    if (n == 0) throw std::invalid_argument("GenSpec: n must be positive");
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("GenSpec: density must lie in (0, 1]");
    if (density * static_cast<double>(n) * static_cast<double>(n) < static_cast<double>(n)) {
      throw std::invalid_argument("GenSpec: density too small to hold the diagonal");
    }
    if (!(kappa >= 1.0)) throw std::invalid_argument("GenSpec: kappa must be at least 1");
    if (spectrum == SpectrumKind::RankDeficient && !(rank < n)) {
      throw std::invalid_argument("GenSpec: rank must be smaller than n");
    }
  }
};

namespace detail {

inline Vector linspace(double a, double b, Index count) {
  Vector v(count);
  if (count == 1) {
    v[0] = b;
    return v;
  }
  for (Index i = 0; i < count; ++i) {
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  v.back() = b;
  return v;
}

}  // namespace detail

inline Vector make_spectrum(const GenSpec& spec) {
  spec.validate();
  switch (spec.spectrum) {
    case SpectrumKind::Spd:
      return detail::linspace(1.0, spec.kappa, spec.n);
    case SpectrumKind::SpsdFull:
      return detail::linspace(0.0, spec.kappa, spec.n);
    case SpectrumKind::RankDeficient: {
      Vector v(spec.n - spec.rank - 1, 0.0);
      const Vector tail = detail::linspace(0.0, spec.kappa, spec.rank + 1);
      v.insert(v.end(), tail.begin(), tail.end());
      return v;
    }
  }
  throw std::logic_error("make_spectrum: unknown spectrum kind");
}

namespace detail {

/// Symmetric matrix under construction, one ordered map per row.
class RotatingMatrix {
 public:
  explicit RotatingMatrix(std::span<const double> diag) : rows_(diag.size()) {
    for (Index i = 0; i < diag.size(); ++i) rows_[i][i] = diag[i];
    nnz_ = diag.size();
  }

  std::size_t nnz() const noexcept { return nnz_; }
  double diag(Index i) const {
    const auto it = rows_[i].find(i);
    return it == rows_[i].end() ? 0.0 : it->second;
  }

  /// A <- G^T A G with G e_i = c e_i - s e_j, G e_j = s e_i + c e_j.
  void rotate(Index i, Index j, double c, double s) {
    std::map<Index, double> ri = rows_[i];
    std::map<Index, double> rj = rows_[j];
    auto get = [](const std::map<Index, double>& row, Index k) {
      const auto it = row.find(k);
      return it == row.end() ? 0.0 : it->second;
    };
    const double aii = get(ri, i);
    const double ajj = get(rj, j);
    const double aij = get(ri, j);

    std::map<Index, double> keys = ri;
    keys.insert(rj.begin(), rj.end());
    for (const auto& [k, unused] : keys) {
      if (k == i || k == j) continue;
      const double aik = get(ri, k);
      const double ajk = get(rj, k);
      set(i, k, c * aik - s * ajk);
      set(j, k, s * aik + c * ajk);
    }
    set(i, i, c * c * aii - 2.0 * c * s * aij + s * s * ajj);
    set(j, j, s * s * aii + 2.0 * c * s * aij + c * c * ajj);
    set(i, j, c * s * (aii - ajj) + (c * c - s * s) * aij);
  }

  SparseSymMatrix build() const {
    std::vector<Entry> entries;
    entries.reserve(nnz_);
    for (Index i = 0; i < rows_.size(); ++i) {
      for (const auto& [k, v] : rows_[i]) entries.push_back({i, k, v});
    }
    return SparseSymMatrix::from_entries(rows_.size(), std::move(entries));
  }

 private:
  // Writes (r, k) and (k, r); positions once touched stay in the pattern.
  void set(Index r, Index k, double v) {
    auto [it, inserted] = rows_[r].insert_or_assign(k, v);
    if (inserted) ++nnz_;
    if (r != k) {
      auto [it2, inserted2] = rows_[k].insert_or_assign(r, v);
      if (inserted2) ++nnz_;
    }
  }

  std::vector<std::map<Index, double>> rows_;
  std::size_t nnz_ = 0;
};

inline void random_rotation(RotatingMatrix& m, Rng& rng, Index n, Index forced_i = static_cast<Index>(-1)) {
  const Index i = forced_i != static_cast<Index>(-1) ? forced_i : static_cast<Index>(rng.below(n));
  Index j = static_cast<Index>(rng.below(n - 1));
  if (j >= i) ++j;
  const double theta = 2.0 * std::numbers::pi * rng.uniform();
  m.rotate(i, j, std::cos(theta), std::sin(theta));
}

}  // namespace detail

/// Symmetric matrix with eigenvalues make_spectrum(spec) and roughly
/// density * n^2 stored entries.
inline SparseSymMatrix gen_matrix(const GenSpec& spec) {
  const Vector spectrum = make_spectrum(spec);
  const Index n = spec.n;
  detail::RotatingMatrix m(spectrum);
  if (n == 1) {
    if (!(spectrum[0] > 0.0)) throw std::runtime_error("gen_matrix: cannot build a positive diagonal");
    return m.build();
  }
  Rng rng(spec.seed);
  const auto target = static_cast<std::size_t>(std::llround(spec.density * static_cast<double>(n) * static_cast<double>(n)));
  const std::size_t max_rotations = 64 * n * n + 1024;
  std::size_t rotations = 0;
  while (m.nnz() < target && rotations < max_rotations) {
    detail::random_rotation(m, rng, n);
    ++rotations;
  }
  // A zero eigenvalue may leave a zero diagonal entry; mix it further.
  const std::size_t attempt_budget = 16 * n + 64;
  for (std::size_t attempt = 0;; ++attempt) {
    Index bad = n;
    for (Index i = 0; i < n; ++i) {
      if (!(m.diag(i) > 0.0)) {
        bad = i;
        break;
      }
    }
    if (bad == n) break;
    if (attempt >= attempt_budget) {
      throw std::runtime_error("gen_matrix: positive diagonal not reached within the attempt budget");
    }
    detail::random_rotation(m, rng, n, bad);
  }
  return m.build();
}

struct GeneratedProblem {
  std::string name;
  NqpProblem problem;
  Vector x_true;
  Vector y_true;
  GenSpec spec;
};

/// x_i = max(g_i, 0) for standard normal g; y_i = |g'_i| where x_i = 0,
/// else 0; b = A x - y.
inline GeneratedProblem gen_rhs(const SparseSymMatrix& a, std::uint64_t seed, std::string name = {}) {
  Rng rng(seed);
  const Index n = a.n();
  Vector x(n);
  for (Index i = 0; i < n; ++i) x[i] = std::max(rng.normal(), 0.0);
  Vector y(n, 0.0);
  for (Index i = 0; i < n; ++i) {
    if (x[i] == 0.0) y[i] = std::abs(rng.normal());
  }
  Vector b = matvec(a, x);
  for (Index i = 0; i < n; ++i) b[i] -= y[i];
  return GeneratedProblem{std::move(name), NqpProblem(a, std::move(b)), std::move(x), std::move(y), GenSpec{}};
}

inline GeneratedProblem generate(const GenSpec& spec, std::string name = {}) {
  GeneratedProblem g = gen_rhs(gen_matrix(spec), spec.seed + 0x9E3779B97F4A7C15ULL, std::move(name));
  g.spec = spec;
  return g;
}

struct SuiteOptions {
  std::optional<Index> n;
  std::optional<double> density;
  std::uint64_t seed = 1;
};

/// Named problem families:
///   toy-spd         SPD, kappa = 10, 1e3, 1e5, 1e7 (n default 200, ~10 entries per row)
///   toy-spd-k4      SPD, kappa = 1e4, n default 1000, density default 0.01
///   toy-spsd-large  rank n-5, kappa = 1e10, n default 1000, density 0.005 (at least 2/n)
///   toy-spsd-small  n = 100, density 0.1, kappa = 1e5, spectrum linspace(0, kappa, n) (rank 99)
inline std::vector<GeneratedProblem> gen_suite(const std::string& preset, const SuiteOptions& opt = {}) {
  std::vector<GeneratedProblem> out;
  auto make = [&](GenSpec spec, const std::string& name) {
    spec.seed = opt.seed;
    out.push_back(generate(spec, name));
  };
  if (preset == "toy-spd") {
    const Index n = opt.n.value_or(200);
    const double density = opt.density.value_or(std::min(1.0, 10.0 / static_cast<double>(n)));
    for (int i = 1; i <= 4; ++i) {
      const double kappa = std::pow(10.0, 2 * i - 1);
      make({n, density, SpectrumKind::Spd, kappa, 0, 0}, "toy-spd-k" + std::to_string(2 * i - 1));
    }
  } else if (preset == "toy-spd-k4") {
    const Index n = opt.n.value_or(1000);
    make({n, opt.density.value_or(std::min(1.0, 10.0 / static_cast<double>(n))), SpectrumKind::Spd, 1e4, 0, 0},
         "toy-spd-k4");
  } else if (preset == "toy-spsd-large") {
    const Index n = opt.n.value_or(1000);
    if (n < 6) throw std::invalid_argument("gen_suite: toy-spsd-large needs n >= 6");
    make({n, opt.density.value_or(std::max(0.005, 2.0 / static_cast<double>(n))), SpectrumKind::RankDeficient, 1e10, n - 5, 0}, "toy-spsd-large");
  } else if (preset == "toy-spsd-small") {
    const Index n = opt.n.value_or(100);
    make({n, opt.density.value_or(0.1), SpectrumKind::SpsdFull, 1e5, 0, 0}, "toy-spsd-small");
  } else {
    throw std::invalid_argument("gen_suite: unknown preset '" + preset + "'");
  }
  return out;
}

}  // namespace nqpsor

#endif  // NQPSOR_GENERATORS_HPP
