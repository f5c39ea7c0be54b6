#pragma once

#include "proxblock/proxblock.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace testutil {

using proxblock::Index;
using proxblock::LinearMap;
using proxblock::Matrix;
using proxblock::Vector;

// Independent explicit forms of the matrix-free operators, built from the
// textbook definitions rather than from LinearMap::apply.

inline Matrix explicit_gradient_x(Index h, Index w) {
  Matrix g = Matrix::Zero(h * w, h * w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c + 1 < w; ++c) {
      g(r * w + c, r * w + c) = -1.0;
      g(r * w + c, r * w + c + 1) = 1.0;
    }
  return g;
}

inline Matrix explicit_gradient_y(Index h, Index w) {
  Matrix g = Matrix::Zero(h * w, h * w);
  for (Index r = 0; r + 1 < h; ++r)
    for (Index c = 0; c < w; ++c) {
      g(r * w + c, r * w + c) = -1.0;
      g(r * w + c, (r + 1) * w + c) = 1.0;
    }
  return g;
}

inline Matrix explicit_ones_row(Index n) { return Matrix::Ones(1, n); }

inline Matrix explicit_replicate(const Matrix& base, Index copies) {
  Matrix out = Matrix::Zero(base.rows() * copies, base.cols() * copies);
  for (Index k = 0; k < copies; ++k)
    out.block(k * base.rows(), k * base.cols(), base.rows(), base.cols()) = base;
  return out;
}

/// Pixel where component k of an amplitude matrix peaks; a natural choice of
/// reference pixel for unmixing tests.
inline Index pick_peak(const Matrix& s_true, Index k) {
  Index best = 0;
  s_true.row(k).maxCoeff(&best);
  return best;
}

/// Column-probe an operator into a dense matrix (uses apply; suitable for
/// consistency checks such as adjoint-vs-transpose).
inline Matrix probe_matrix(const LinearMap& op) {
  Matrix m(op.out_dim(), op.in_dim());
  for (Index j = 0; j < op.in_dim(); ++j) {
    Vector e = Vector::Zero(op.in_dim());
    e[j] = 1.0;
    m.col(j) = op.apply(e);
  }
  return m;
}

/// Fresh temporary directory under the test binary's working directory.
class TempDir {
 public:
  explicit TempDir(const std::string& label) {
    static int counter = 0;
    path_ = std::filesystem::path("test_tmp") /
            (label + "_" + std::to_string(counter++) + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
