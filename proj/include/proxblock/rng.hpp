#pragma once

#include "proxblock/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace proxblock {

/// Seeded random source with pinned output.
///
/// std::distribution objects are not portable across standard library
/// implementations, so the draw algorithms are spelled out here: uniforms take
/// the top 53 bits of an mt19937_64 draw, normals use Box-Muller on two
/// uniforms. The same seed yields the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal deviate.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  /// Uniform integer in [0, n).
  Index uniform_index(Index n) {
    require(n > 0, "Rng::uniform_index: n must be positive");
    return static_cast<Index>(engine_() % static_cast<std::uint64_t>(n));
  }

  Vector vector(Index n, double lo, double hi) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Matrix matrix(Index rows, Index cols, double lo, double hi) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

  /// Identifier recorded in run manifests.
  static constexpr const char* kName = "mt19937_64/u53/box-muller";

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::mt19937_64 engine_;
};

}  // namespace proxblock
