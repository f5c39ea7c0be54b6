#include "test_util.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

using namespace proxblock;
using testutil::probe_matrix;

namespace {

// The operator zoo exercised by the property sections, paired with an
// independently constructed explicit matrix.
std::vector<std::pair<LinearMap, Matrix>> operator_zoo() {
  Rng rng(20240817);
  Matrix dense = rng.matrix(4, 3, -2.0, 2.0);
  std::vector<std::pair<LinearMap, Matrix>> zoo;
  zoo.emplace_back(LinearMap::identity(5), Matrix::Identity(5, 5));
  zoo.emplace_back(LinearMap::dense(dense), dense);
  zoo.emplace_back(LinearMap::gradient(3, 4, LinearMap::Axis::X),
                   testutil::explicit_gradient_x(3, 4));
  zoo.emplace_back(LinearMap::gradient(3, 4, LinearMap::Axis::Y),
                   testutil::explicit_gradient_y(3, 4));
  zoo.emplace_back(LinearMap::ones_row(4), testutil::explicit_ones_row(4));
  zoo.emplace_back(LinearMap::replicate(LinearMap::ones_row(3), 2),
                   testutil::explicit_replicate(testutil::explicit_ones_row(3), 2));
  zoo.emplace_back(LinearMap::replicate(LinearMap::gradient(2, 3, LinearMap::Axis::X), 2),
                   testutil::explicit_replicate(testutil::explicit_gradient_x(2, 3), 2));
  return zoo;
}

double oracle_spectral_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.transpose() * m);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

TEST_CASE("identity and dense operators map vectors as their matrices do") {
  LinearMap id = LinearMap::identity(3);
  Vector v(3);
  v << 1.0, -2.0, 0.5;
  REQUIRE((id.apply(v) - v).norm() == 0.0);
  REQUIRE((id.apply_adjoint(v) - v).norm() == 0.0);

  Matrix m(2, 2);
  m << 1.0, 0.0, 1.0, 1.0;
  LinearMap dense = LinearMap::dense(m);
  Vector x(2);
  x << 2.0, 3.0;
  Vector lx = dense.apply(x);
  REQUIRE(lx[0] == 2.0);
  REQUIRE(lx[1] == 5.0);
  Vector y(2);
  y << 1.0, 1.0;
  Vector lty = dense.apply_adjoint(y);
  REQUIRE(lty[0] == 2.0);
  REQUIRE(lty[1] == 1.0);
}

TEST_CASE("gradient_x on a 1x3 image takes forward differences, last entry zero") {
  LinearMap g = LinearMap::gradient(1, 3, LinearMap::Axis::X);
  Vector v(3);
  v << 1.0, 3.0, 6.0;
  Vector d = g.apply(v);
  REQUIRE(d[0] == 2.0);
  REQUIRE(d[1] == 3.0);
  REQUIRE(d[2] == 0.0);
}

TEST_CASE("gradient_y on a 2x1 image differences down the column") {
  LinearMap g = LinearMap::gradient(2, 1, LinearMap::Axis::Y);
  Vector v(2);
  v << 5.0, 9.0;
  Vector d = g.apply(v);
  REQUIRE(d[0] == 4.0);
  REQUIRE(d[1] == 0.0);
}

TEST_CASE("gradients of a constant image vanish") {
  Vector flat = Vector::Constant(12, 3.25);
  for (auto axis : {LinearMap::Axis::X, LinearMap::Axis::Y}) {
    LinearMap g = LinearMap::gradient(3, 4, axis);
    REQUIRE(g.apply(flat).norm() == 0.0);
  }
}

TEST_CASE("operator factories validate their arguments") {
  REQUIRE_THROWS_AS(LinearMap::gradient(1, 1, LinearMap::Axis::X), InputError);
  REQUIRE_THROWS_AS(LinearMap::identity(0), InputError);
  REQUIRE_THROWS_AS(LinearMap::ones_row(0), InputError);
  REQUIRE_THROWS_AS(LinearMap::replicate(LinearMap::identity(2), 0), InputError);
  Matrix bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(LinearMap::dense(bad), InputError);
}

TEST_CASE("apply rejects vectors of the wrong size with a descriptive message") {
  LinearMap g = LinearMap::gradient(2, 2, LinearMap::Axis::X);
  try {
    g.apply(Vector::Zero(3));
    FAIL("expected InputError");
  } catch (const InputError& e) {
    std::string msg = e.what();
    REQUIRE(msg.find("4") != std::string::npos);
    REQUIRE(msg.find("3") != std::string::npos);
    REQUIRE(msg.find("gradient_x(2x2)") != std::string::npos);
  }
  REQUIRE_THROWS_AS(g.apply_adjoint(Vector::Zero(5)), InputError);
}

TEST_CASE("matrix-free kinds agree with independently built explicit matrices") {
  Rng rng(11);
  for (const auto& [op, mat] : operator_zoo()) {
    REQUIRE(op.out_dim() == mat.rows());
    REQUIRE(op.in_dim() == mat.cols());
    for (int trial = 0; trial < 25; ++trial) {
      Vector x = rng.vector(op.in_dim(), -3.0, 3.0);
      Vector y = rng.vector(op.out_dim(), -3.0, 3.0);
      REQUIRE((op.apply(x) - mat * x).norm() <= 1e-12 * (1.0 + x.norm()));
      REQUIRE((op.apply_adjoint(y) - mat.transpose() * y).norm() <= 1e-12 * (1.0 + y.norm()));
    }
  }
}

TEST_CASE("adjoint identity <Lx, y> == <x, L'y> holds to 1e-10 across the zoo") {
  Rng rng(12);
  for (const auto& [op, mat] : operator_zoo()) {
    for (int trial = 0; trial < 100; ++trial) {
      Vector x = rng.vector(op.in_dim(), -5.0, 5.0);
      Vector y = rng.vector(op.out_dim(), -5.0, 5.0);
      double lhs = op.apply(x).dot(y);
      double rhs = x.dot(op.apply_adjoint(y));
      REQUIRE(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("spectral norms match a dense eigensolver oracle") {
  for (const auto& [op, mat] : operator_zoo()) {
    double oracle = oracle_spectral_norm(mat);
    double est = op.spectral_norm();
    INFO(op.describe());
    REQUIRE(op.spectral_norm_converged());
    REQUIRE(std::abs(est - oracle) <= 1e-5 * std::max(1.0, oracle));
  }
}

TEST_CASE("spectral norm of the 1x8 difference operator lands in (1.9, 2.0)") {
  // Oracle value: largest singular value of the W=8 forward-difference matrix
  // with a zeroed last row, sqrt(2 + 2 cos(pi/8)).
  const double expected = std::sqrt(2.0 + 2.0 * std::cos(M_PI / 8.0));
  LinearMap g = LinearMap::gradient(1, 8, LinearMap::Axis::X);
  double est = g.spectral_norm();
  REQUIRE(est > 1.9);
  REQUIRE(est < 2.0);
  REQUIRE(std::abs(est - expected) <= 1e-5);
}

TEST_CASE("norm bound |Lx| <= (1 + 2 tol) shat |x| holds for random vectors") {
  Rng rng(13);
  const double slack = 1.0 + 2.0 * LinearMap::kSnormTol;
  for (const auto& [op, mat] : operator_zoo()) {
    double shat = op.spectral_norm();
    for (int trial = 0; trial < 100; ++trial) {
      Vector x = rng.vector(op.in_dim(), -4.0, 4.0);
      INFO(op.describe());
      REQUIRE(op.apply(x).norm() <= slack * shat * x.norm() + 1e-300);
    }
  }
}

TEST_CASE("power iteration handles rank-one and zero operators") {
  // ones_row maps the all-ones start vector onto the top eigenvector at once.
  auto est = LinearMap::ones_row(6).estimate_spectral_norm(1e-6, 1000);
  REQUIRE(est.converged);
  REQUIRE(est.value == Catch::Approx(std::sqrt(6.0)).epsilon(1e-9));

  LinearMap zero = LinearMap::dense(Matrix::Zero(3, 3));
  auto zest = zero.estimate_spectral_norm(1e-6, 1000);
  REQUIRE(zest.converged);
  REQUIRE(zest.value == 0.0);
}

TEST_CASE("gradient operators annihilate the ones start and still converge") {
  // A constant image is in the nullspace of both gradients, so the power
  // iteration must survive the deliberate restart.
  LinearMap g = LinearMap::gradient(4, 4, LinearMap::Axis::Y);
  auto est = g.estimate_spectral_norm(1e-6, 1000);
  REQUIRE(est.converged);
  REQUIRE(est.value > 1.0);
}

TEST_CASE("an exhausted iteration budget is reported, not hidden") {
  Rng rng(14);
  Matrix m = rng.matrix(6, 6, -1.0, 1.0);
  auto est = LinearMap::dense(m).estimate_spectral_norm(1e-12, 1);
  REQUIRE_FALSE(est.converged);
  REQUIRE(est.value > 0.0);
}

TEST_CASE("spectral norm estimates are cached and shared between copies") {
  LinearMap a = LinearMap::gradient(5, 5, LinearMap::Axis::X);
  LinearMap b = a;  // shares the cache
  double first = a.spectral_norm();
  REQUIRE(b.spectral_norm() == first);
  REQUIRE(a.spectral_norm() == first);
}

TEST_CASE("replicate stacks are block diagonal in shape and describe() says so") {
  LinearMap rep = LinearMap::replicate(LinearMap::gradient(2, 2, LinearMap::Axis::Y), 3);
  REQUIRE(rep.in_dim() == 12);
  REQUIRE(rep.out_dim() == 12);
  REQUIRE(rep.describe() == "replicate(gradient_y(2x2), 3)");
  // Blocks act independently: a vector supported on one chunk stays there.
  Vector x = Vector::Zero(12);
  x.segment(4, 4) << 1.0, 2.0, 3.0, 4.0;
  Vector y = rep.apply(x);
  REQUIRE(y.segment(0, 4).norm() == 0.0);
  REQUIRE(y.segment(8, 4).norm() == 0.0);
  REQUIRE(y.segment(4, 4).norm() > 0.0);
}
