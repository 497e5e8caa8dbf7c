#ifndef NQPSOR_IMAGING_HPP
#define NQPSOR_IMAGING_HPP

// Gaussian deblurring as box-constrained least squares,
//
//   minimize ||C x - d||^2  subject to 0 <= x <= 1,
//
// where C is a separable Gaussian blur with replicate boundary. C is never
// assembled: normal SOR only needs the columns of C, and a column of a
// separable operator is the outer product of two 1-D columns.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nqpsor/linalg.hpp"
#include "nqpsor/model.hpp"
#include "nqpsor/rng.hpp"
#include "nqpsor/solvers.hpp"

namespace nqpsor {

/// Row-major grayscale image; pixel values are nominally in [0, 1].
struct GrayImage {
  Index width = 0;
  Index height = 0;
  Vector pixels;

  GrayImage() = default;
  GrayImage(Index w, Index h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}
  GrayImage(Index w, Index h, Vector px) : width(w), height(h), pixels(std::move(px)) {
    require_size(pixels.size(), w * h, "GrayImage");
  }

  double& at(Index row, Index col) { return pixels[row * width + col]; }
  double at(Index row, Index col) const { return pixels[row * width + col]; }
  Index size() const noexcept { return pixels.size(); }
};

/// Discrete Gaussian with standard deviation sigma truncated at radius
/// ceil(4 sigma), normalized to unit sum.
inline Vector gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
  const auto radius = static_cast<Index>(std::ceil(4.0 * sigma));
  Vector taps(2 * radius + 1);
  double sum = 0.0;
  for (Index k = 0; k < taps.size(); ++k) {
    const double t = static_cast<double>(k) - static_cast<double>(radius);
    taps[k] = std::exp(-t * t / (2.0 * sigma * sigma));
    sum += taps[k];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Separable blur with replicate boundary:
///   (C u)(r, c) = sum_{p,q} k[p] k[q] u(clamp(r + p - R), clamp(c + q - R)).
class BlurOperator {
 public:
  BlurOperator(Index width, Index height, Vector taps) : width_(width), height_(height), taps_(std::move(taps)) {
    if (width == 0 || height == 0) throw std::invalid_argument("BlurOperator: empty image");
    if (taps_.empty() || taps_.size() % 2 == 0) throw std::invalid_argument("BlurOperator: taps must have odd length");
    for (std::size_t k = 0; k < taps_.size(); ++k) {
      if (!(taps_[k] > 0.0)) throw std::invalid_argument("BlurOperator: taps must be positive");
      if (taps_[k] != taps_[taps_.size() - 1 - k]) throw std::invalid_argument("BlurOperator: taps must be symmetric");
    }
    radius_ = taps_.size() / 2;
    cols_x_ = build_columns(width_);
    cols_y_ = build_columns(height_);
    col_sq_x_ = squared_norms(cols_x_);
    col_sq_y_ = squared_norms(cols_y_);
  }

  static BlurOperator gaussian(Index width, Index height, double sigma) {
    return BlurOperator(width, height, gaussian_kernel(sigma));
  }

  Index width() const noexcept { return width_; }
  Index height() const noexcept { return height_; }
  std::span<const double> taps() const noexcept { return taps_; }

  std::size_t rows() const noexcept { return width_ * height_; }
  std::size_t cols() const noexcept { return width_ * height_; }

  double col_sq_norm(Index j) const { return col_sq_y_[j / width_] * col_sq_x_[j % width_]; }

  double col_dot(Index j, std::span<const double> r) const {
    double s = 0.0;
    for (const auto& [py, wy] : cols_y_[j / width_]) {
      const double* row = r.data() + py * width_;
      double inner = 0.0;
      for (const auto& [px, wx] : cols_x_[j % width_]) inner += wx * row[px];
      s += wy * inner;
    }
    return s;
  }

  void col_axpy(Index j, double alpha, std::span<double> r) const {
    for (const auto& [py, wy] : cols_y_[j / width_]) {
      double* row = r.data() + py * width_;
      const double a = alpha * wy;
      for (const auto& [px, wx] : cols_x_[j % width_]) row[px] += a * wx;
    }
  }

  Vector apply(std::span<const double> u) const {
    require_size(u.size(), rows(), "BlurOperator::apply");
    Vector tmp(u.size());
    // Along rows, then along columns.
    for (Index r = 0; r < height_; ++r) {
      for (Index c = 0; c < width_; ++c) {
        double s = 0.0;
        for (Index k = 0; k < taps_.size(); ++k) s += taps_[k] * u[r * width_ + clamp_index(c, k, width_)];
        tmp[r * width_ + c] = s;
      }
    }
    Vector out(u.size());
    for (Index r = 0; r < height_; ++r) {
      for (Index c = 0; c < width_; ++c) {
        double s = 0.0;
        for (Index k = 0; k < taps_.size(); ++k) s += taps_[k] * tmp[clamp_index(r, k, height_) * width_ + c];
        out[r * width_ + c] = s;
      }
    }
    return out;
  }

  /// Exact adjoint of apply: every tap is scattered back to the clamped
  /// source pixel it was read from.
  Vector apply_transpose(std::span<const double> v) const {
    require_size(v.size(), rows(), "BlurOperator::apply_transpose");
    Vector tmp(v.size(), 0.0);
    for (Index r = 0; r < height_; ++r) {
      for (Index c = 0; c < width_; ++c) {
        const double val = v[r * width_ + c];
        for (Index k = 0; k < taps_.size(); ++k) tmp[clamp_index(r, k, height_) * width_ + c] += taps_[k] * val;
      }
    }
    Vector out(v.size(), 0.0);
    for (Index r = 0; r < height_; ++r) {
      for (Index c = 0; c < width_; ++c) {
        const double val = tmp[r * width_ + c];
        for (Index k = 0; k < taps_.size(); ++k) out[r * width_ + clamp_index(c, k, width_)] += taps_[k] * val;
      }
    }
    return out;
  }

 private:
  using Column = std::vector<std::pair<Index, double>>;

  Index clamp_index(Index p, Index k, Index len) const {
    const auto q = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(radius_);
    return static_cast<Index>(std::clamp<std::ptrdiff_t>(q, 0, static_cast<std::ptrdiff_t>(len) - 1));
  }

  // Column j of the 1-D operator: weight at output p is the sum of taps whose
  // clamped source is j.
  std::vector<Column> build_columns(Index len) const {
    std::vector<Column> cols(len);
    for (Index p = 0; p < len; ++p) {
      for (Index k = 0; k < taps_.size(); ++k) {
        auto& col = cols[clamp_index(p, k, len)];
        if (!col.empty() && col.back().first == p) col.back().second += taps_[k];
        else col.emplace_back(p, taps_[k]);
      }
    }
    return cols;
  }

  static Vector squared_norms(const std::vector<Column>& cols) {
    Vector out(cols.size(), 0.0);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      for (const auto& [p, w] : cols[j]) out[j] += w * w;
    }
    return out;
  }

  Index width_;
  Index height_;
  Vector taps_;
  Index radius_ = 0;
  std::vector<Column> cols_x_;
  std::vector<Column> cols_y_;
  Vector col_sq_x_;
  Vector col_sq_y_;
};

static_assert(ColumnAction<BlurOperator>);

inline GrayImage blur_apply(const BlurOperator& op, const GrayImage& img) {
  if (img.width != op.width() || img.height != op.height()) throw std::invalid_argument("blur_apply: dimension mismatch");
  return GrayImage(img.width, img.height, op.apply(img.pixels));
}

inline GrayImage transpose_apply(const BlurOperator& op, const GrayImage& img) {
  if (img.width != op.width() || img.height != op.height()) {
    throw std::invalid_argument("transpose_apply: dimension mismatch");
  }
  return GrayImage(img.width, img.height, op.apply_transpose(img.pixels));
}

/// Adds i.i.d. N(0, sigma^2) noise and clamps to [0, 1].
inline GrayImage add_noise(const GrayImage& img, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_noise: sigma must be nonnegative");
  if (sigma == 0.0) return img;
  Rng rng(seed);
  GrayImage out = img;
  for (double& p : out.pixels) p = std::clamp(p + sigma * rng.normal(), 0.0, 1.0);
  return out;
}

inline double relative_error(std::span<const double> x, std::span<const double> truth) {
  return distance2(x, truth) / norm2(truth);
}

using BlurProblem = BasicNnlsProblem<BlurOperator>;

struct DeblurResult {
  GrayImage image;
  SolveResult solve;
};

/// Box-constrained deblurring by normal SOR, started from the observation.
inline DeblurResult deblur(const GrayImage& observed, const BlurOperator& op, const SolverConfig& cfg,
                           RelaxationMode mode) {
  if (observed.width != op.width() || observed.height != op.height()) {
    throw std::invalid_argument("deblur: dimension mismatch");
  }
  const BlurProblem q(op, observed.pixels, Vector(op.cols(), 0.0), Vector(op.cols(), 1.0));
  Vector start = project_box(observed.pixels, q.lower(), q.upper());
  SolveResult res = normal_psor_solve(q, mode, cfg, start);
  GrayImage out(observed.width, observed.height, res.x);
  return {std::move(out), std::move(res)};
}

/// Binary test pattern on a black background: a square, a disc and a thin
/// bar, all white. Every pixel sits on a bound of the [0, 1] box.
inline GrayImage synthetic_image(Index size) {
  if (size < 4) throw std::invalid_argument("synthetic_image: size must be at least 4");
  GrayImage img(size, size, 0.0);
  const double s = static_cast<double>(size);
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const double y = (static_cast<double>(r) + 0.5) / s;
      const double x = (static_cast<double>(c) + 0.5) / s;
      const double dx = x - 0.68;
      const double dy = y - 0.62;
      const bool square = x > 0.15 && x < 0.45 && y > 0.15 && y < 0.45;
      const bool disc = dx * dx + dy * dy < 0.22 * 0.22;
      const bool bar = y > 0.78 && y < 0.86 && x > 0.1 && x < 0.9;
      if (square || disc || bar) img.at(r, c) = 1.0;
    }
  }
  return img;
}

// ---- PGM I/O (P5 binary and P2 ASCII, maxval up to 65535 on read) ----

namespace detail {

inline std::string pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

inline Index pgm_number(std::istream& in, const char* what) {
  const std::string tok = pgm_token(in);
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("PGM: bad ") + what + " '" + tok + "'");
  }
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("PGM: cannot open " + path);
  const std::string magic = detail::pgm_token(in);
  if (magic != "P5" && magic != "P2") throw std::runtime_error("PGM: unsupported magic '" + magic + "'");
  const Index w = detail::pgm_number(in, "width");
  const Index h = detail::pgm_number(in, "height");
  const Index maxval = detail::pgm_number(in, "maxval");
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw std::runtime_error("PGM: bad header");
  GrayImage img(w, h);
  if (magic == "P2") {
    for (double& p : img.pixels) p = static_cast<double>(detail::pgm_number(in, "pixel")) / static_cast<double>(maxval);
  } else {
    const bool wide = maxval > 255;
    for (double& p : img.pixels) {
      unsigned v = 0;
      const int hi = in.get();
      if (hi == EOF) throw std::runtime_error("PGM: truncated pixel data");
      v = static_cast<unsigned>(hi);
      if (wide) {
        const int lo = in.get();
        if (lo == EOF) throw std::runtime_error("PGM: truncated pixel data");
        v = (v << 8) | static_cast<unsigned>(lo);
      }
      p = static_cast<double>(v) / static_cast<double>(maxval);
    }
  }
  return img;
}

inline unsigned char quantize8(double p) {
  return static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
}

/// 8-bit PGM; binary (P5) unless `ascii` is set (P2).
inline void write_pgm(const GrayImage& img, const std::string& path, bool ascii = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("PGM: cannot write " + path);
  out << (ascii ? "P2" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  if (ascii) {
    for (Index r = 0; r < img.height; ++r) {
      for (Index c = 0; c < img.width; ++c) out << (c ? " " : "") << static_cast<int>(quantize8(img.at(r, c)));
      out << '\n';
    }
  } else {
    for (const double p : img.pixels) out.put(static_cast<char>(quantize8(p)));
  }
  if (!out) throw std::runtime_error("PGM: write failed for " + path);
}

}  // namespace nqpsor

#endif  // NQPSOR_IMAGING_HPP
