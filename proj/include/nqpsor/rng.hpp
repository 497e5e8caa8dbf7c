#ifndef NQPSOR_RNG_HPP
#define NQPSOR_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nqpsor {

/// Seeded generator whose output is identical on every conforming platform.
///
/// The engine is std::mt19937_64 (its sequence is fixed by the standard).
/// The standard distributions are not, so the conversions are done here:
/// uniforms take the top 53 bits, normals use the Box-Muller transform with
/// the second variate cached, and bounded integers use rejection sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nqpsor

#endif  // NQPSOR_RNG_HPP
