#pragma once

#include "proxblock/linear_map.hpp"
#include "proxblock/prox.hpp"
#include "proxblock/rng.hpp"
#include "proxblock/solver.hpp"
#include "proxblock/types.hpp"

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace proxblock {

/// Squared Frobenius misfit |AS - D|_F^2.
inline double nmf_objective(const Matrix& A, const Matrix& S, const Matrix& D) {
  require(A.cols() == S.rows(), "nmf_objective: inner dimensions of A and S do not match");
  require(A.rows() == D.rows() && S.cols() == D.cols(),
          "nmf_objective: product shape does not match D");
  return (A * S - D).squaredNorm();
}

/// d/dA |AS - D|_F^2 = 2 (AS - D) S'.
inline Matrix nmf_grad_A(const Matrix& A, const Matrix& S, const Matrix& D) {
  require(A.cols() == S.rows() && A.rows() == D.rows() && S.cols() == D.cols(),
          "nmf_grad_A: shape mismatch");
  return 2.0 * ((A * S - D) * S.transpose());
}

/// d/dS |AS - D|_F^2 = 2 A' (AS - D).
inline Matrix nmf_grad_S(const Matrix& A, const Matrix& S, const Matrix& D) {
  require(A.cols() == S.rows() && A.rows() == D.rows() && S.cols() == D.cols(),
          "nmf_grad_S: shape mismatch");
  return 2.0 * (A.transpose() * (A * S - D));
}

/// Largest singular value of a dense matrix, via power iteration on the
/// smaller of the two Gram matrices.
inline double matrix_spectral_norm(const Matrix& M, double tol = LinearMap::kSnormTol,
                                   int max_iter = LinearMap::kSnormMaxIter) {
  require(M.rows() > 0 && M.cols() > 0, "matrix_spectral_norm: matrix must be non-empty");
  Matrix gram;
  if (M.rows() <= M.cols())
    gram = M * M.transpose();
  else
    gram = M.transpose() * M;
  auto est = power_iteration([&gram](const Vector& v) { return (gram * v).eval(); },
                             gram.rows(), tol, max_iter);
  return est.value;
}

enum class NmfBlock { A, S };

/// Inverse Lipschitz step for one factor: the gradient in A is 2 R S' with
/// Lipschitz constant 2 |S|_s^2, so mu_A = 1 / (2 |S|_s^2), and symmetrically
/// for S. When the other factor is identically zero (as it is at the standard
/// S0 = 0 start) the bound degenerates, so the caller supplies a fallback.
inline double nmf_step_size(NmfBlock block, const Matrix& A, const Matrix& S,
                            double fallback_mu) {
  require(fallback_mu > 0.0, "nmf_step_size: fallback step must be positive");
  const Matrix& other = (block == NmfBlock::A) ? S : A;
  if (other.size() == 0 || other.isZero(0.0)) return fallback_mu;
  double sn = matrix_spectral_norm(other);
  if (sn == 0.0) return fallback_mu;
  return 1.0 / (2.0 * sn * sn);
}

struct UnmixingConfig {
  Index components = 1;        // endmembers, excluding any background term
  bool background = false;     // append a flat background component
  double lambda_tv = 0.0;      // anisotropic TV weight on the abundance maps
  double beta = 0.0;           // penalty safety factor; <= 0 selects max_j M_j
  Index image_height = 0;      // abundance map shape; required when lambda_tv > 0
  Index image_width = 0;
  std::vector<Index> reference_pixels;  // one pixel column of D per component
  std::uint64_t seed = 0;      // used only when reference pixels are absent
};

/// Data-driven start for the spectra matrix A (bands x components):
///   1. background column = per-band minimum of D over the pixels,
///   2. remaining columns = reference pixel spectra minus the background,
///      clipped at zero (or seeded uniform noise when no references given),
///   3. every column rescaled to unit sum.
inline Matrix init_spectra(const Matrix& D, const UnmixingConfig& cfg) {
  const Index bands = D.rows();
  const Index pixels = D.cols();
  require(bands > 0 && pixels > 0, "init_spectra: data matrix must be non-empty");
  require(cfg.components > 0, "init_spectra: components must be positive");
  if (!cfg.reference_pixels.empty()) {
    require(static_cast<Index>(cfg.reference_pixels.size()) == cfg.components,
            "init_spectra: expected " + std::to_string(cfg.components) +
                " reference pixels, got " + std::to_string(cfg.reference_pixels.size()));
    for (Index p : cfg.reference_pixels)
      require(p >= 0 && p < pixels,
              "init_spectra: reference pixel " + std::to_string(p) + " out of range");
  }

  const Index total = cfg.components + (cfg.background ? 1 : 0);
  Matrix A0(bands, total);
  Vector background = Vector::Zero(bands);
  if (cfg.background) {
    background = D.rowwise().minCoeff();
    A0.col(total - 1) = background;
  }
  if (!cfg.reference_pixels.empty()) {
    for (Index k = 0; k < cfg.components; ++k)
      A0.col(k) = (D.col(cfg.reference_pixels[k]) - background).cwiseMax(0.0);
  } else {
    Rng rng(cfg.seed);
    for (Index k = 0; k < cfg.components; ++k)
      for (Index b = 0; b < bands; ++b) A0(b, k) = rng.uniform();
  }
  for (Index k = 0; k < total; ++k) {
    double s = A0.col(k).sum();
    if (s > 0.0)
      A0.col(k) /= s;
    else
      A0.col(k).setConstant(1.0 / static_cast<double>(bands));
  }
  return A0;
}

/// Standard start for the amplitude matrix S: all zeros.
inline Matrix init_amplitudes(Index components, Index pixels) {
  require(components > 0 && pixels > 0, "init_amplitudes: shape must be positive");
  return Matrix::Zero(components, pixels);
}

/// A fully wired two-block NMF problem plus the bookkeeping needed to read
/// the factors back out of a SolverState.
struct UnmixingProblem {
  BlockProblem problem;
  Index bands = 0;
  Index total_components = 0;  // components plus background, if any
  Index pixels = 0;
  bool background = false;
  Index background_row = -1;

  Matrix extract_A(const SolverState& st) const {
    return unflatten_cols(st.x.at(0), bands, total_components);
  }
  Matrix extract_S(const SolverState& st) const {
    return unflatten_rows(st.x.at(1), total_components, pixels);
  }
};

/// Assemble the two-block problem min |AS - D|_F^2 with A, S >= 0 folded into
/// the forward-backward proxes and the constraint stack
///   A: per-column unit sums      (replicated ones_row, projection to ones)
///   S: flat background row       (identity, row-mean prox)  [background]
///      anisotropic TV            (replicated gradient_x / gradient_y,
///                                 soft thresholding at weight lambda_tv)
/// Block A is flattened column by column, block S row by row so that each
/// component's abundance map is a contiguous row-major image.
inline UnmixingProblem build_unmixing_problem(const Matrix& D, const UnmixingConfig& cfg) {
  const Index bands = D.rows();
  const Index pixels = D.cols();
  require(bands > 0 && pixels > 0, "build_unmixing_problem: data matrix must be non-empty");
  require(D.allFinite(), "build_unmixing_problem: data matrix has non-finite entries");
  require(cfg.components > 0, "build_unmixing_problem: components must be positive");
  require(cfg.lambda_tv >= 0.0, "build_unmixing_problem: lambda_tv must be non-negative");
  const bool has_shape = cfg.image_height > 0 || cfg.image_width > 0;
  if (cfg.lambda_tv > 0.0)
    require(has_shape, "build_unmixing_problem: lambda_tv > 0 requires the image shape");
  if (has_shape)
    require(cfg.image_height > 0 && cfg.image_width > 0 &&
                cfg.image_height * cfg.image_width == pixels,
            "build_unmixing_problem: image shape " + std::to_string(cfg.image_height) + "x" +
                std::to_string(cfg.image_width) + " does not cover " + std::to_string(pixels) +
                " pixels");

  UnmixingProblem up;
  up.bands = bands;
  up.pixels = pixels;
  up.total_components = cfg.components + (cfg.background ? 1 : 0);
  up.background = cfg.background;
  if (cfg.background) up.background_row = up.total_components - 1;
  const Index K = up.total_components;

  Block a;
  a.name = "A";
  a.x0 = flatten_cols(init_spectra(D, cfg));
  a.constraints.push_back(
      ConstraintSpec{LinearMap::replicate(LinearMap::ones_row(bands), K),
                     ProxFn::project_to_ones(K).with_descriptor("norm"), 1.0});

  Block s;
  s.name = "S";
  s.x0 = flatten_rows(init_amplitudes(K, pixels));
  if (cfg.background)
    s.constraints.push_back(
        ConstraintSpec{LinearMap::identity(K * pixels),
                       ProxFn::flat_rows({up.background_row}, K, pixels).with_descriptor("bg"),
                       1.0});
  if (cfg.lambda_tv > 0.0) {
    LinearMap gx = LinearMap::gradient(cfg.image_height, cfg.image_width, LinearMap::Axis::X);
    LinearMap gy = LinearMap::gradient(cfg.image_height, cfg.image_width, LinearMap::Axis::Y);
    s.constraints.push_back(
        ConstraintSpec{LinearMap::replicate(std::move(gx), K),
                       ProxFn::soft_threshold(cfg.lambda_tv).with_descriptor("tv_x"), 1.0});
    s.constraints.push_back(
        ConstraintSpec{LinearMap::replicate(std::move(gy), K),
                       ProxFn::soft_threshold(cfg.lambda_tv).with_descriptor("tv_y"), 1.0});
  }

  BlockProblem p;
  p.blocks.push_back(std::move(a));
  p.blocks.push_back(std::move(s));
  if (cfg.beta > 0.0) {
    p.beta = cfg.beta;
  } else {
    size_t max_m = 1;
    for (const Block& b : p.blocks) max_m = std::max(max_m, b.constraints.size());
    p.beta = static_cast<double>(max_m);
  }

  auto data = std::make_shared<const Matrix>(D);
  double dsn = matrix_spectral_norm(D);
  const double fallback_mu = dsn > 0.0 ? 1.0 / (2.0 * dsn * dsn) : 1.0;

  p.f_prox = [data, bands, K, pixels](int j, const std::vector<Vector>& x, const Vector& v,
                                      double mu) -> Vector {
    ProxFn post = ProxFn::nonneg();
    if (j == 0) {
      Matrix S = unflatten_rows(x.at(1), K, pixels);
      GradFn grad = [&](const Vector& a_flat) {
        return flatten_cols(nmf_grad_A(unflatten_cols(a_flat, bands, K), S, *data));
      };
      return prox_grad_step(grad, v, mu, &post);
    }
    Matrix A = unflatten_cols(x.at(0), bands, K);
    GradFn grad = [&](const Vector& s_flat) {
      return flatten_rows(nmf_grad_S(A, unflatten_rows(s_flat, K, pixels), *data));
    };
    return prox_grad_step(grad, v, mu, &post);
  };

  p.h = [bands, K, pixels, fallback_mu](int j, const std::vector<Vector>& x) {
    Matrix A = unflatten_cols(x.at(0), bands, K);
    Matrix S = unflatten_rows(x.at(1), K, pixels);
    return nmf_step_size(j == 0 ? NmfBlock::A : NmfBlock::S, A, S, fallback_mu);
  };

  p.objective = [data, bands, K, pixels](const std::vector<Vector>& x) {
    return nmf_objective(unflatten_cols(x.at(0), bands, K), unflatten_rows(x.at(1), K, pixels),
                         *data);
  };

  up.problem = std::move(p);
  return up;
}

/// Total anisotropic variation of the stacked abundance maps: the l1 norm of
/// both forward-difference images, summed over components.
inline double total_variation(const Matrix& S, Index height, Index width) {
  require(height > 0 && width > 0 && height * width == S.cols(),
          "total_variation: image shape does not cover the pixel count");
  LinearMap gx = LinearMap::gradient(height, width, LinearMap::Axis::X);
  LinearMap gy = LinearMap::gradient(height, width, LinearMap::Axis::Y);
  double tv = 0.0;
  for (Index k = 0; k < S.rows(); ++k) {
    Vector row = S.row(k).transpose();
    tv += gx.apply(row).lpNorm<1>() + gy.apply(row).lpNorm<1>();
  }
  return tv;
}

}  // namespace proxblock
