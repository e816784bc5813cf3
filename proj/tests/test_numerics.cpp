#include <doctest.h>

#include <cmath>

#include "ssldr/matrix.hpp"
#include "ssldr/rng.hpp"

using namespace ssldr;

TEST_CASE("matmul identity and zero cases") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix identity = Matrix::Identity(2, 2);
  CHECK((matmul(identity, a) - a).norm() == 0.0);

  Matrix zero_col = Matrix::Zero(2, 1);
  const Matrix produced = matmul(a, zero_col);
  CHECK(produced.rows() == 2);
  CHECK(produced.cols() == 1);
  CHECK(produced.norm() == 0.0);
}

TEST_CASE("matmul small forced example") {
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(2, 1);
  b << 5, 6;
  const Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 17.0);
  CHECK(c(1, 0) == 39.0);
}

TEST_CASE("matmul rejects mismatched shapes and names them") {
  Matrix a(2, 3), b(2, 2);
  a.setZero();
  b.setZero();
  CHECK_THROWS_WITH_AS(matmul(a, b),
                       doctest::Contains("(2x3)"), DimensionError);
}

TEST_CASE("matmul is associative on conforming triples") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 1 + int(rng.uniform_index(6));
    const int q = 1 + int(rng.uniform_index(6));
    const int r = 1 + int(rng.uniform_index(6));
    const int s = 1 + int(rng.uniform_index(6));
    Matrix a(p, q), b(q, r), c(r, s);
    for (auto* m : {&a, &b, &c}) {
      for (Eigen::Index i = 0; i < m->size(); ++i) {
        m->data()[i] = rng.uniform(-2.0, 2.0);
      }
    }
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    const double scale = std::max(1.0, right.norm());
    CHECK((left - right).norm() / scale < 1e-9);
  }
}

TEST_CASE("sigmoid fixed points") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::abs(sigmoid(500.0) - 1.0) < 1e-12);
  // Independently evaluated 1 / (1 + e^1.5) at 30 digits.
  CHECK(sigmoid(-1.5) == doctest::Approx(0.18242552380635634).epsilon(1e-14));
}

TEST_CASE("sigmoid stays strictly inside (0,1) at extreme inputs") {
  for (const double x : {-1e6, -800.0, -20.0, 0.0, 20.0, 800.0, 1e6}) {
    const double s = sigmoid(x);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    CHECK(std::isfinite(s));
  }
  Matrix m(1, 3);
  m << -1e6, 0.0, 1e6;
  const Matrix s = sigmoid(m);
  CHECK((s.array() > 0.0).all());
  CHECK((s.array() < 1.0).all());
}

TEST_CASE("finite_diff_grad on a quadratic") {
  const auto loss = [](const Vector& theta) { return theta[0] * theta[0]; };
  Vector theta(1);
  theta << 3.0;
  const Vector grad = finite_diff_grad(loss, theta, 1e-5);
  CHECK(std::abs(grad[0] - 6.0) < 1e-6);
}

TEST_CASE("finite_diff_grad of a constant is zero") {
  const auto loss = [](const Vector&) { return 4.25; };
  Vector theta(5);
  theta.setConstant(1.0);
  const Vector grad = finite_diff_grad(loss, theta, 1e-5);
  CHECK(grad.norm() == 0.0);
}

TEST_CASE("finite_diff_grad reports the offending coordinate") {
  const auto loss = [](const Vector& theta) {
    return theta[1] > 1.0 ? std::numeric_limits<double>::quiet_NaN()
                          : theta.squaredNorm();
  };
  Vector theta(3);
  theta << 0.0, 1.0, 0.0;  // coordinate 1 steps over the cliff
  CHECK_THROWS_WITH_AS(finite_diff_grad(loss, theta, 1e-5),
                       doctest::Contains("coordinate 1"), NumericError);
}

TEST_CASE("analytic gradients of elementwise ops match finite differences") {
  // Property over a composite op built from this module's primitives:
  // L(theta) = sum(sigmoid(A theta)) with analytic backward.
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int rows = 2 + int(rng.uniform_index(4));
    const int cols = 2 + int(rng.uniform_index(4));
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a.data()[i] = rng.uniform(-2.0, 2.0);
    }
    Vector theta(cols);
    for (int i = 0; i < cols; ++i) theta[i] = rng.uniform(-2.0, 2.0);

    const auto loss = [&](const Vector& t) {
      return sigmoid(Vector(a * t)).sum();
    };
    const Vector activated = sigmoid(Vector(a * theta));
    Vector analytic = Vector::Zero(cols);
    for (int r = 0; r < rows; ++r) {
      analytic +=
          sigmoid_grad_from_output(activated[r]) * a.row(r).transpose();
    }
    const Vector numeric = finite_diff_grad(loss, theta, 1e-5);
    for (int i = 0; i < cols; ++i) {
      CHECK(relative_gap(analytic[i], numeric[i]) < 1e-4);
    }
  }
}
