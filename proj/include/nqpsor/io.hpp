#ifndef NQPSOR_IO_HPP
#define NQPSOR_IO_HPP

// File formats:
//   * Matrix Market coordinate real, symmetric (SparseSymMatrix) or general
//     (ColumnOperator). Symmetric files hold the lower triangle.
//   * Vectors: optional "# n=<dim>" line, then one value per line.
//   * Iteration traces: CSV with header
//       iter,delta_norm,objective,omega,h,kkt_residual,d,s,event
//   * Solver configuration: a JSON object with optional keys.
// Reals are written with 17 significant digits so they read back exactly.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nqpsor/diagnostics.hpp"
#include "nqpsor/linalg.hpp"
#include "nqpsor/solvers.hpp"

namespace nqpsor {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string& tok) {
  if (tok == "nan") return kNaN;
  if (tok == "inf") return kInfinity;
  if (tok == "-inf") return -kInfinity;
  std::size_t used = 0;
  const double v = std::stod(tok, &used);
  if (used != tok.size()) throw std::invalid_argument("not a number: '" + tok + "'");
  return v;
}

class MatrixMarketError : public std::runtime_error {
 public:
  enum class Kind { Io, MalformedHeader, Unsupported, NotSymmetric, MalformedEntry, NonPositiveDiagonal, Invalid };

  MatrixMarketError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

struct MatrixMarketData {
  Index rows = 0;
  Index cols = 0;
  bool symmetric = false;
  std::vector<Entry> entries;
};

inline std::string lower_case(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline MatrixMarketData read_matrix_market_raw(const std::string& path) {
  using K = MatrixMarketError::Kind;
  std::ifstream in(path);
  if (!in) throw MatrixMarketError(K::Io, "MatrixMarket: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw MatrixMarketError(K::MalformedHeader, "MatrixMarket: empty file");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || symmetry.empty()) {
    throw MatrixMarketError(K::MalformedHeader, "MatrixMarket: malformed header line '" + line + "'");
  }
  object = lower_case(object);
  format = lower_case(format);
  field = lower_case(field);
  symmetry = lower_case(symmetry);
  if (object != "matrix" || format != "coordinate") {
    throw MatrixMarketError(K::Unsupported, "MatrixMarket: only coordinate matrices are supported");
  }
  if (field != "real" && field != "integer") {
    throw MatrixMarketError(K::Unsupported, "MatrixMarket: field '" + field + "' is not supported");
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw MatrixMarketError(K::Unsupported, "MatrixMarket: symmetry '" + symmetry + "' is not supported");
  }
  MatrixMarketData data;
  data.symmetric = symmetry == "symmetric";
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    break;
  }
  std::size_t nnz = 0;
  {
    std::istringstream size_line(line);
    long r = -1, c = -1, z = -1;
    if (!(size_line >> r >> c >> z) || r <= 0 || c <= 0 || z < 0) {
      throw MatrixMarketError(K::MalformedHeader, "MatrixMarket: malformed size line '" + line + "'");
    }
    data.rows = static_cast<Index>(r);
    data.cols = static_cast<Index>(c);
    nnz = static_cast<std::size_t>(z);
  }
  data.entries.reserve(nnz);
  while (data.entries.size() < nnz && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ls(line);
    long i = 0, j = 0;
    std::string vtok;
    if (!(ls >> i >> j >> vtok)) throw MatrixMarketError(K::MalformedEntry, "MatrixMarket: malformed entry '" + line + "'");
    double v = 0.0;
    try {
      v = parse_real(vtok);
    } catch (const std::exception&) {
      throw MatrixMarketError(K::MalformedEntry, "MatrixMarket: malformed value '" + vtok + "'");
    }
    if (i < 1 || j < 1 || static_cast<Index>(i) > data.rows || static_cast<Index>(j) > data.cols) {
      throw MatrixMarketError(K::MalformedEntry, "MatrixMarket: index out of range in '" + line + "'");
    }
    data.entries.push_back({static_cast<Index>(i - 1), static_cast<Index>(j - 1), v});
  }
  if (data.entries.size() != nnz) throw MatrixMarketError(K::MalformedEntry, "MatrixMarket: fewer entries than declared");
  return data;
}

}  // namespace detail

/// Reads a coordinate real symmetric file; the lower triangle is mirrored.
inline SparseSymMatrix read_matrix_market(const std::string& path) {
  using K = MatrixMarketError::Kind;
  detail::MatrixMarketData data = detail::read_matrix_market_raw(path);
  if (!data.symmetric) {
    throw MatrixMarketError(K::NotSymmetric, "MatrixMarket: symmetric matrix expected, file is 'general'");
  }
  if (data.rows != data.cols) throw MatrixMarketError(K::MalformedHeader, "MatrixMarket: symmetric matrix must be square");
  std::vector<bool> diag(data.rows, false);
  for (auto& e : data.entries) {
    if (e.col > e.row) std::swap(e.row, e.col);
    if (e.row == e.col) {
      if (!(e.value > 0.0)) break;
      diag[e.row] = true;
    }
  }
  for (const auto& e : data.entries) {
    if (e.row == e.col && !(e.value > 0.0)) {
      throw MatrixMarketError(K::NonPositiveDiagonal, "MatrixMarket: positive diagonal required (row " +
                                                          std::to_string(e.row + 1) + ")");
    }
  }
  for (Index i = 0; i < data.rows; ++i) {
    if (!diag[i]) {
      throw MatrixMarketError(K::NonPositiveDiagonal,
                              "MatrixMarket: positive diagonal required (row " + std::to_string(i + 1) + ")");
    }
  }
  try {
    return SparseSymMatrix::from_lower(data.rows, data.entries);
  } catch (const std::invalid_argument& e) {
    throw MatrixMarketError(K::Invalid, std::string("MatrixMarket: ") + e.what());
  }
}

/// Reads a general (or symmetric, expanded) coordinate file as a column operator.
inline ColumnOperator read_matrix_market_operator(const std::string& path) {
  detail::MatrixMarketData data = detail::read_matrix_market_raw(path);
  if (data.symmetric) {
    const std::size_t count = data.entries.size();
    for (std::size_t k = 0; k < count; ++k) {
      const Entry e = data.entries[k];
      if (e.row != e.col) data.entries.push_back({e.col, e.row, e.value});
    }
  }
  try {
    return ColumnOperator::from_entries(data.rows, data.cols, std::move(data.entries));
  } catch (const std::invalid_argument& e) {
    throw MatrixMarketError(MatrixMarketError::Kind::Invalid, std::string("MatrixMarket: ") + e.what());
  }
}

inline void write_matrix_market(const SparseSymMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError(MatrixMarketError::Kind::Io, "MatrixMarket: cannot write " + path);
  const auto lower = a.lower_entries();
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << a.n() << ' ' << a.n() << ' ' << lower.size() << '\n';
  for (const auto& e : lower) out << e.row + 1 << ' ' << e.col + 1 << ' ' << format_real(e.value) << '\n';
  if (!out) throw MatrixMarketError(MatrixMarketError::Kind::Io, "MatrixMarket: write failed for " + path);
}

inline void write_matrix_market(const ColumnOperator& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MatrixMarketError(MatrixMarketError::Kind::Io, "MatrixMarket: cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << c.rows() << ' ' << c.cols() << ' ' << c.nnz() << '\n';
  for (Index j = 0; j < c.cols(); ++j) {
    const auto rows = c.col_rows(j);
    const auto vals = c.col_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k) out << rows[k] + 1 << ' ' << j + 1 << ' ' << format_real(vals[k]) << '\n';
  }
  if (!out) throw MatrixMarketError(MatrixMarketError::Kind::Io, "MatrixMarket: write failed for " + path);
}

inline void write_vector(std::span<const double> v, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("vector: cannot write " + path);
  out << "# n=" << v.size() << '\n';
  for (const double x : v) out << format_real(x) << '\n';
  if (!out) throw std::runtime_error("vector: write failed for " + path);
}

inline Vector read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vector: cannot open " + path);
  Vector v;
  std::optional<std::size_t> declared;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("n=");
      if (pos != std::string::npos) declared = static_cast<std::size_t>(std::stoul(line.substr(pos + 2)));
      continue;
    }
    try {
      v.push_back(parse_real(line));
    } catch (const std::exception&) {
      throw std::runtime_error("vector: malformed value '" + line + "' in " + path);
    }
  }
  if (declared && *declared != v.size()) {
    throw std::runtime_error("vector: header declares " + std::to_string(*declared) + " values, found " +
                             std::to_string(v.size()));
  }
  return v;
}

inline constexpr const char* kTraceHeader = "iter,delta_norm,objective,omega,h,kkt_residual,d,s,event";

inline void write_trace_csv(const IterationTrace& t, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double kkt = t.kkt_residual()[k];
    const double s = t.slope()[k];
    out << k + 1 << ',' << format_real(t.delta_norm()[k]) << ',' << format_real(t.objective()[k]) << ','
        << format_real(t.omega()[k]) << ',' << format_real(t.h()[k]) << ','
        << (std::isnan(kkt) ? std::string() : format_real(kkt)) << ',' << format_real(t.decrement()[k]) << ','
        << (std::isnan(s) ? std::string() : format_real(s)) << ',' << t.events()[k] << '\n';
  }
}

inline void write_trace_csv(const IterationTrace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write " + path);
  write_trace_csv(t, out);
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

/// Rebuilds a trace from its CSV form. d is recomputed from delta_norm.
inline IterationTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw std::runtime_error("trace: bad header in " + path);
  IterationTrace t;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw std::runtime_error("trace: malformed row '" + line + "'");
    t.push(parse_real(f[1]), parse_real(f[2]), parse_real(f[3]), parse_real(f[4]),
           f[5].empty() ? kNaN : parse_real(f[5]), f[8]);
    t.set_slope(t.size() - 1, f[7].empty() ? kNaN : parse_real(f[7]));
  }
  return t;
}

/// Reads solver settings from a JSON object. Unknown keys are rejected.
/// Keys: tolerance, max_iterations, c1, c2, lambda1, lambda2, rho,
/// eps_omega, max_omega, freeze_m, freeze_threshold, shift_sigma
/// (number or "auto"), kkt_every, record_trace.
inline SolverConfig parse_solver_config(const nlohmann::json& j, SolverConfig cfg = {}) {
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "tolerance") cfg.tolerance = value.get<double>();
    else if (key == "max_iterations") cfg.max_iterations = value.get<std::size_t>();
    else if (key == "c1") cfg.wolfe.c1 = value.get<double>();
    else if (key == "c2") cfg.wolfe.c2 = value.get<double>();
    else if (key == "lambda1") cfg.wolfe.lambda1 = value.get<double>();
    else if (key == "lambda2") cfg.wolfe.lambda2 = value.get<double>();
    else if (key == "rho") cfg.wolfe.rho = value.get<double>();
    else if (key == "eps_omega") cfg.wolfe.eps_omega = value.get<double>();
    else if (key == "max_omega") cfg.wolfe.max_omega = value.get<double>();
    else if (key == "freeze_m") cfg.freeze_m = value.get<std::size_t>();
    else if (key == "freeze_threshold") cfg.freeze_threshold = value.get<double>();
    else if (key == "kkt_every") cfg.kkt_every = value.get<std::size_t>();
    else if (key == "record_trace") cfg.record_trace = value.get<bool>();
    else if (key == "shift_sigma") {
      if (value.is_string() && value.get<std::string>() == "auto") cfg.shift_sigma.reset();
      else cfg.shift_sigma = value.get<double>();
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline SolverConfig load_solver_config(const std::string& path, SolverConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  return parse_solver_config(j, std::move(base));
}

}  // namespace nqpsor

#endif  // NQPSOR_IO_HPP
