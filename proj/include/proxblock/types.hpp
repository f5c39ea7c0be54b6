#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace proxblock {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Malformed inputs: shape mismatches, unparsable files, bad configuration.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solve that cannot continue (non-finite gradients, invalid step sizes).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InputError(message);
}

/// Stack the columns of a matrix into one vector (column-major order).
inline Vector flatten_cols(const Matrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

inline Matrix unflatten_cols(const Vector& v, Index rows, Index cols) {
  require(v.size() == rows * cols,
          "unflatten_cols: expected " + std::to_string(rows * cols) + " entries, got " +
              std::to_string(v.size()));
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

/// Stack the rows of a matrix into one vector (row-major order).
inline Vector flatten_rows(const Matrix& m) {
  Matrix t = m.transpose();
  return Eigen::Map<const Vector>(t.data(), t.size());
}

inline Matrix unflatten_rows(const Vector& v, Index rows, Index cols) {
  require(v.size() == rows * cols,
          "unflatten_rows: expected " + std::to_string(rows * cols) + " entries, got " +
              std::to_string(v.size()));
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  return Eigen::Map<const RowMajor>(v.data(), rows, cols);
}

}  // namespace proxblock
