#pragma once

#include "proxblock/rng.hpp"
#include "proxblock/types.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

namespace proxblock {

struct SpectralNormEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Estimate the largest eigenvalue of the normal operator x -> L'Lx by power
/// iteration and return its square root, i.e. the spectral norm of L.
///
/// The start vector is all ones (exact for the rank-one and identity kinds);
/// if that lies in the nullspace it is replaced once by a pinned pseudorandom
/// vector. The replacement must not be a structured pattern: a linear ramp,
/// for instance, is mapped by the gradient normal operators straight into a
/// low eigenspace and stalls there. Convergence is judged
/// on the projected remaining error of the Rayleigh quotient sequence: with
/// geometric decay at observed ratio q, the outstanding error is about
/// change * q / (1 - q). Stopping on that estimate (rather than on the last
/// change alone) keeps the returned value within the requested relative
/// tolerance of the true norm even when q is close to one, as it is for the
/// gradient operators.
template <typename NormalOp>
inline SpectralNormEstimate power_iteration(NormalOp&& normal, Index dim, double tol,
                                            int max_iter) {
  require(dim > 0, "power_iteration: dimension must be positive");
  require(tol > 0.0, "power_iteration: tolerance must be positive");
  require(max_iter > 0, "power_iteration: max_iter must be positive");

  Vector v = Vector::Ones(dim);
  Vector w = normal(v);
  require(w.size() == dim, "power_iteration: normal operator changed the dimension");
  if (w.norm() == 0.0) {
    Rng rng(0x243f6a8885a308d3ull);
    for (Index i = 0; i < dim; ++i) v[i] = rng.uniform(0.5, 1.5);
    w = normal(v);
    if (w.norm() == 0.0) return {0.0, true, 0};  // zero operator
  }

  double lambda = 0.0;
  double prev_lambda = 0.0;
  double prev_change = -1.0;
  for (int it = 1; it <= max_iter; ++it) {
    v = w / w.norm();
    w = normal(v);
    lambda = v.dot(w);  // Rayleigh quotient, equals |Lv|^2 >= 0
    double change = std::abs(lambda - prev_lambda);
    if (it >= 2) {
      // The change at it == 2 is the first genuine difference of Rayleigh
      // quotients (the one before was measured against zero), so the ratio
      // extrapolation only engages from it == 3 on.
      double projected = change;
      if (it >= 3 && prev_change > 0.0 && change < prev_change) {
        double q = change / prev_change;
        projected = change * q / (1.0 - q);
      }
      double scale = std::max(lambda, std::numeric_limits<double>::min());
      if (change == 0.0 || projected <= 0.5 * tol * scale)
        return {std::sqrt(std::max(lambda, 0.0)), true, it};
    }
    prev_change = change;
    prev_lambda = lambda;
  }
  return {std::sqrt(std::max(lambda, 0.0)), false, max_iter};
}

/// A linear operator held in matrix-free form.
///
/// Instances are immutable after construction and cheap to copy; the spectral
/// norm estimate is computed lazily and shared between copies. Construction
/// goes through the named factories below.
class LinearMap {
 public:
  static constexpr double kSnormTol = 1e-6;
  static constexpr int kSnormMaxIter = 1000;

  enum class Axis { X, Y };

  /// Identity on R^dim.
  static LinearMap identity(Index dim) {
    require(dim > 0, "LinearMap::identity: dimension must be positive");
    return LinearMap(Kind::Identity, dim, dim);
  }

  /// Explicit dense matrix.
  static LinearMap dense(Matrix m) {
    require(m.rows() > 0 && m.cols() > 0, "LinearMap::dense: matrix must be non-empty");
    require(m.allFinite(), "LinearMap::dense: matrix has non-finite entries");
    LinearMap op(Kind::Dense, m.cols(), m.rows());
    op.dense_ = std::move(m);
    return op;
  }

  /// Forward difference along image rows (Axis::X) or columns (Axis::Y) of a
  /// height x width image stored row-major. The operator is square: the last
  /// difference along the axis has no forward neighbour and is fixed at zero.
  static LinearMap gradient(Index height, Index width, Axis axis) {
    require(height > 0 && width > 0, "LinearMap::gradient: image dimensions must be positive");
    require(height * width >= 2, "LinearMap::gradient: image must have at least two pixels");
    LinearMap op(axis == Axis::X ? Kind::GradientX : Kind::GradientY, height * width,
                 height * width);
    op.height_ = height;
    op.width_ = width;
    return op;
  }

  /// Row vector of ones: maps x to the 1-vector (sum of x).
  static LinearMap ones_row(Index dim) {
    require(dim > 0, "LinearMap::ones_row: dimension must be positive");
    return LinearMap(Kind::OnesRow, dim, 1);
  }

  /// Block-diagonal stack of `copies` instances of `base`, applied chunk by
  /// chunk to a concatenated input.
  static LinearMap replicate(LinearMap base, Index copies) {
    require(copies > 0, "LinearMap::replicate: copies must be positive");
    if (copies == 1) return base;
    LinearMap op(Kind::Replicate, base.in_dim() * copies, base.out_dim() * copies);
    op.copies_ = copies;
    op.base_ = std::make_shared<const LinearMap>(std::move(base));
    return op;
  }

  Index in_dim() const { return in_; }
  Index out_dim() const { return out_; }

  Vector apply(const Vector& x) const {
    require(x.size() == in_, describe() + ": apply expects size " + std::to_string(in_) +
                                 ", got " + std::to_string(x.size()));
    switch (kind_) {
      case Kind::Identity:
        return x;
      case Kind::Dense:
        return dense_ * x;
      case Kind::GradientX: {
        Vector out = Vector::Zero(out_);
        for (Index r = 0; r < height_; ++r) {
          const Index row = r * width_;
          for (Index c = 0; c + 1 < width_; ++c) out[row + c] = x[row + c + 1] - x[row + c];
        }
        return out;
      }
      case Kind::GradientY: {
        Vector out = Vector::Zero(out_);
        for (Index r = 0; r + 1 < height_; ++r)
          for (Index c = 0; c < width_; ++c)
            out[r * width_ + c] = x[(r + 1) * width_ + c] - x[r * width_ + c];
        return out;
      }
      case Kind::OnesRow: {
        Vector out(1);
        out[0] = x.sum();
        return out;
      }
      case Kind::Replicate: {
        Vector out(out_);
        const Index bi = base_->in_dim();
        const Index bo = base_->out_dim();
        for (Index k = 0; k < copies_; ++k)
          out.segment(k * bo, bo) = base_->apply(x.segment(k * bi, bi));
        return out;
      }
    }
    throw SolverError("LinearMap::apply: unreachable");
  }

  Vector apply_adjoint(const Vector& y) const {
    require(y.size() == out_, describe() + ": apply_adjoint expects size " +
                                  std::to_string(out_) + ", got " + std::to_string(y.size()));
    switch (kind_) {
      case Kind::Identity:
        return y;
      case Kind::Dense:
        return dense_.transpose() * y;
      case Kind::GradientX: {
        // Entry (r, c) receives +y(r, c-1) from the difference ending here and
        // -y(r, c) from the one starting here; the zero row at c = W-1
        // contributes nothing.
        Vector out(in_);
        for (Index r = 0; r < height_; ++r) {
          const Index row = r * width_;
          for (Index c = 0; c < width_; ++c) {
            double v = 0.0;
            if (c >= 1) v += y[row + c - 1];
            if (c + 1 < width_) v -= y[row + c];
            out[row + c] = v;
          }
        }
        return out;
      }
      case Kind::GradientY: {
        Vector out(in_);
        for (Index r = 0; r < height_; ++r) {
          for (Index c = 0; c < width_; ++c) {
            double v = 0.0;
            if (r >= 1) v += y[(r - 1) * width_ + c];
            if (r + 1 < height_) v -= y[r * width_ + c];
            out[r * width_ + c] = v;
          }
        }
        return out;
      }
      case Kind::OnesRow:
        return Vector::Constant(in_, y[0]);
      case Kind::Replicate: {
        Vector out(in_);
        const Index bi = base_->in_dim();
        const Index bo = base_->out_dim();
        for (Index k = 0; k < copies_; ++k)
          out.segment(k * bi, bi) = base_->apply_adjoint(y.segment(k * bo, bo));
        return out;
      }
    }
    throw SolverError("LinearMap::apply_adjoint: unreachable");
  }

  /// Spectral norm at the default tolerance, cached on first use.
  double spectral_norm() const {
    double cached = cache_->value.load(std::memory_order_acquire);
    if (cached >= 0.0) return cached;
    return estimate_spectral_norm(kSnormTol, kSnormMaxIter).value;
  }

  /// Recompute the spectral norm estimate and refresh the cache.
  SpectralNormEstimate estimate_spectral_norm(double tol, int max_iter) const {
    SpectralNormEstimate est;
    if (kind_ == Kind::Replicate) {
      // Copies are identical blocks, so the stacked norm equals the base norm.
      est = base_->estimate_spectral_norm(tol, max_iter);
    } else {
      est = power_iteration([this](const Vector& v) { return apply_adjoint(apply(v)); }, in_,
                            tol, max_iter);
    }
    cache_->converged.store(est.converged, std::memory_order_relaxed);
    cache_->value.store(est.value, std::memory_order_release);
    return est;
  }

  /// Whether the cached estimate met its tolerance. Fills the cache if empty.
  bool spectral_norm_converged() const {
    spectral_norm();
    return cache_->converged.load(std::memory_order_relaxed);
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Identity:
        return "identity(" + std::to_string(in_) + ")";
      case Kind::Dense:
        return "dense(" + std::to_string(out_) + "x" + std::to_string(in_) + ")";
      case Kind::GradientX:
        return "gradient_x(" + std::to_string(height_) + "x" + std::to_string(width_) + ")";
      case Kind::GradientY:
        return "gradient_y(" + std::to_string(height_) + "x" + std::to_string(width_) + ")";
      case Kind::OnesRow:
        return "ones_row(" + std::to_string(in_) + ")";
      case Kind::Replicate:
        return "replicate(" + base_->describe() + ", " + std::to_string(copies_) + ")";
    }
    return "linear_map";
  }

 private:
  enum class Kind { Identity, Dense, GradientX, GradientY, OnesRow, Replicate };

  struct SnormCache {
    std::atomic<double> value{-1.0};
    std::atomic<bool> converged{false};
  };

  LinearMap(Kind kind, Index in, Index out) : kind_(kind), in_(in), out_(out) {}

  Kind kind_;
  Index in_ = 0;
  Index out_ = 0;
  Matrix dense_;
  Index height_ = 0;
  Index width_ = 0;
  Index copies_ = 0;
  std::shared_ptr<const LinearMap> base_;
  std::shared_ptr<SnormCache> cache_ = std::make_shared<SnormCache>();
};

}  // namespace proxblock
