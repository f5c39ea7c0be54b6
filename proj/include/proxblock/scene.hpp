#pragma once

#include "proxblock/rng.hpp"
#include "proxblock/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

namespace proxblock {

struct SceneSpec {
  Index bands = 1;
  Index height = 1;
  Index width = 1;
  Index components = 1;
  double amplitude = 1.0e4;      // typical radiance scale of the amplitude maps
  double background_level = 0.0; // flat pedestal as a fraction of amplitude
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

struct Scene {
  Matrix D;           // bands x pixels observation
  Matrix A_true;      // bands x components spectra, unit column sums
  Matrix S_true;      // components x pixels piecewise-constant amplitudes
  Vector background;  // per-band flat pedestal added to every pixel
};

/// Deterministic synthetic scene: bump-shaped unit-sum spectra, abundance
/// maps made of a few axis-aligned rectangles at a configurable radiance
/// scale, an optional flat illumination pedestal, and optional Gaussian
/// noise clipped so the observation stays non-negative. Every draw comes
/// from one seeded Rng in a fixed order.
inline Scene gen_scene(const SceneSpec& spec) {
  require(spec.bands > 0 && spec.height > 0 && spec.width > 0 && spec.components > 0,
          "gen_scene: all dimensions must be positive");
  require(spec.noise_sigma >= 0.0, "gen_scene: noise_sigma must be non-negative");
  require(spec.amplitude > 0.0, "gen_scene: amplitude must be positive");
  require(spec.background_level >= 0.0, "gen_scene: background_level must be non-negative");

  Rng rng(spec.seed);
  const Index B = spec.bands;
  const Index H = spec.height;
  const Index W = spec.width;
  const Index L = H * W;
  const Index K = spec.components;

  // Spectra are staggered bumps over the bands with a small random floor:
  // distinct, well-separated endmembers, every entry positive, unit column
  // sums. Heavily correlated spectra make the factorization ill-conditioned,
  // which is a property of the data, not of the solver under test.
  Matrix A(B, K);
  for (Index k = 0; k < K; ++k) {
    const double center = (static_cast<double>(k) + 0.5) * static_cast<double>(B) / K +
                          (rng.uniform() - 0.5) * static_cast<double>(B) / (2.0 * K);
    const double width = std::max(1.0, static_cast<double>(B) / (2.0 * K)) *
                         (0.75 + 0.5 * rng.uniform());
    for (Index b = 0; b < B; ++b) {
      const double t = (static_cast<double>(b) - center) / width;
      A(b, k) = std::exp(-0.5 * t * t) + 0.05 * rng.uniform();
    }
    A.col(k) /= A.col(k).sum();
  }

  // Each component gets a low plateau over the whole image (components share
  // support, as mixed pixels do in practice), one strong rectangle confined
  // to its own horizontal strip so its amplitude map peaks in a region of its
  // own, and two weaker texture rectangles that may land and overlap anywhere.
  // The shared plateau is deliberate: it keeps the rows of S correlated, so
  // no single component sits exactly on the spectral edge of S where the
  // scaled gradient step stops damping the column-normalization duals.
  require(H >= K, "gen_scene: need height >= components for strip placement");
  constexpr int kTextureRects = 2;
  Matrix S = Matrix::Zero(K, L);
  auto paint = [&](Index k, Index lo, Index hi, double amp_lo, double amp_hi) {
    const Index rows = hi - lo + 1;
    Index r0 = lo + rng.uniform_index(rows);
    Index r1 = lo + rng.uniform_index(rows);
    if (r0 > r1) std::swap(r0, r1);
    Index c0 = rng.uniform_index(W);
    Index c1 = rng.uniform_index(W);
    if (c0 > c1) std::swap(c0, c1);
    double amp = rng.uniform(amp_lo, amp_hi);
    for (Index r = r0; r <= r1; ++r)
      for (Index c = c0; c <= c1; ++c) S(k, r * W + c) += amp;
  };
  const double amp = spec.amplitude;
  for (Index k = 0; k < K; ++k) {
    S.row(k).array() += rng.uniform(0.25 * amp, 0.5 * amp);
    paint(k, (k * H) / K, ((k + 1) * H) / K - 1, 1.0 * amp, 2.0 * amp);
    for (int rect = 0; rect < kTextureRects; ++rect)
      paint(k, 0, H - 1, 0.25 * amp, 0.75 * amp);
  }

  // Optional flat illumination floor: one broad unit-sum spectrum added with
  // the same strength to every pixel.
  Vector bg = Vector::Zero(B);
  if (spec.background_level > 0.0) {
    for (Index b = 0; b < B; ++b) bg[b] = 0.5 + rng.uniform();
    bg *= spec.background_level * amp / bg.sum();
  }

  Matrix D = A * S;
  D.colwise() += bg;
  if (spec.noise_sigma > 0.0) {
    for (Index i = 0; i < B; ++i)
      for (Index j = 0; j < L; ++j) D(i, j) += spec.noise_sigma * rng.normal();
    D = D.cwiseMax(0.0);
  }
  return Scene{std::move(D), std::move(A), std::move(S), std::move(bg)};
}

}  // namespace proxblock
