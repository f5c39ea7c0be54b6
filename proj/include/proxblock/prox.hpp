#pragma once

#include "proxblock/types.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace proxblock {

using GradFn = std::function<Vector(const Vector&)>;

/// prox of the indicator of the non-negative orthant: entrywise max(0, v).
inline Vector prox_nonneg(const Vector& v, double rho) {
  require(rho > 0.0, "prox_nonneg: rho must be positive");
  return v.cwiseMax(0.0);
}

/// prox of w * |.|_1 at scale rho: entrywise soft thresholding by rho * w.
inline Vector prox_soft_threshold(const Vector& v, double rho, double weight) {
  require(rho > 0.0, "prox_soft_threshold: rho must be positive");
  require(weight >= 0.0, "prox_soft_threshold: weight must be non-negative");
  const double t = rho * weight;
  return v.array().sign() * (v.array().abs() - t).max(0.0);
}

/// prox of the indicator of {1}: every entry becomes one.
inline Vector prox_project_ones(const Vector& v, double rho) {
  require(rho > 0.0, "prox_project_ones: rho must be positive");
  return Vector::Ones(v.size());
}

/// prox of the indicator of "selected rows are constant" for a num_rows x
/// row_len matrix flattened row-major: each selected row is replaced by its
/// mean. Rows that are already constant pass through bit for bit, which makes
/// repeated application exactly idempotent.
inline Vector prox_flat_rows(const Vector& v, double rho, const std::vector<Index>& rows,
                             Index num_rows, Index row_len) {
  require(rho > 0.0, "prox_flat_rows: rho must be positive");
  require(num_rows > 0 && row_len > 0, "prox_flat_rows: matrix shape must be positive");
  require(v.size() == num_rows * row_len,
          "prox_flat_rows: expected " + std::to_string(num_rows * row_len) + " entries, got " +
              std::to_string(v.size()));
  Vector out = v;
  for (Index k : rows) {
    require(k >= 0 && k < num_rows,
            "prox_flat_rows: row index " + std::to_string(k) + " out of range");
    auto seg = out.segment(k * row_len, row_len);
    bool constant = true;
    for (Index i = 1; i < row_len; ++i)
      if (seg[i] != seg[0]) {
        constant = false;
        break;
      }
    if (!constant) seg.setConstant(seg.mean());
  }
  return out;
}

class ProxFn;

/// One forward-backward step: evaluate the gradient at v, move by -mu * grad,
/// then apply the post prox (if any) at the same scale.
inline Vector prox_grad_step(const GradFn& grad, const Vector& v, double mu, const ProxFn* post);

/// A proximal operator with a short descriptor for trace output.
///
/// Wraps the free functions above behind a uniform apply(v, rho) interface so
/// constraints and solvers can hold heterogeneous proxes by value.
class ProxFn {
 public:
  static ProxFn nonneg() {
    return ProxFn("nonneg", [](const Vector& v, double rho) { return prox_nonneg(v, rho); });
  }

  static ProxFn soft_threshold(double weight) {
    require(weight >= 0.0, "ProxFn::soft_threshold: weight must be non-negative");
    return ProxFn("soft_l1", [weight](const Vector& v, double rho) {
      return prox_soft_threshold(v, rho, weight);
    });
  }

  static ProxFn project_to_ones(Index length) {
    require(length > 0, "ProxFn::project_to_ones: length must be positive");
    return ProxFn("project_ones", [length](const Vector& v, double rho) {
      require(v.size() == length, "project_to_ones: expected size " + std::to_string(length) +
                                      ", got " + std::to_string(v.size()));
      return prox_project_ones(v, rho);
    });
  }

  static ProxFn flat_rows(std::vector<Index> rows, Index num_rows, Index row_len) {
    require(num_rows > 0 && row_len > 0, "ProxFn::flat_rows: matrix shape must be positive");
    for (Index k : rows)
      require(k >= 0 && k < num_rows,
              "ProxFn::flat_rows: row index " + std::to_string(k) + " out of range");
    return ProxFn("flat_rows", [rows = std::move(rows), num_rows, row_len](const Vector& v,
                                                                           double rho) {
      return prox_flat_rows(v, rho, rows, num_rows, row_len);
    });
  }

  static ProxFn grad_step(GradFn grad) {
    require(static_cast<bool>(grad), "ProxFn::grad_step: gradient callback required");
    return ProxFn("grad_step", [grad = std::move(grad)](const Vector& v, double rho) {
      return prox_grad_step(grad, v, rho, nullptr);
    });
  }

  static ProxFn grad_step(GradFn grad, ProxFn post) {
    require(static_cast<bool>(grad), "ProxFn::grad_step: gradient callback required");
    auto shared_post = std::make_shared<ProxFn>(std::move(post));
    return ProxFn("grad_step+" + shared_post->descriptor(),
                  [grad = std::move(grad), shared_post](const Vector& v, double rho) {
                    return prox_grad_step(grad, v, rho, shared_post.get());
                  });
  }

  Vector apply(const Vector& v, double rho) const {
    require(rho > 0.0, "ProxFn::apply: rho must be positive");
    return fn_(v, rho);
  }

  const std::string& descriptor() const { return descriptor_; }

  ProxFn with_descriptor(std::string d) const {
    ProxFn copy = *this;
    copy.descriptor_ = std::move(d);
    return copy;
  }

 private:
  using Fn = std::function<Vector(const Vector&, double)>;
  ProxFn(std::string descriptor, Fn fn) : descriptor_(std::move(descriptor)), fn_(std::move(fn)) {}

  std::string descriptor_;
  Fn fn_;
};

inline Vector prox_grad_step(const GradFn& grad, const Vector& v, double mu, const ProxFn* post) {
  require(mu > 0.0, "prox_grad_step: step size must be positive");
  Vector g = grad(v);
  if (g.size() != v.size())
    throw InputError("prox_grad_step: gradient size " + std::to_string(g.size()) +
                     " does not match argument size " + std::to_string(v.size()));
  if (!g.allFinite()) throw SolverError("prox_grad_step: gradient has non-finite entries");
  Vector w = v - mu * g;
  return post != nullptr ? post->apply(w, mu) : w;
}

}  // namespace proxblock
