#include "ssldr/matrix.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ssldr {

namespace {

std::string shape_of(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_of(a) +
                         " * " + shape_of(b));
  }
  return a * b;
}

double sigmoid(double x) {
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);  // safe: x < 0 so e < 1
    s = e / (1.0 + e);
  }
  // exp underflow can land exactly on 0 or 1; keep the open interval.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::min(hi, std::max(lo, s));
}

Matrix sigmoid(const Matrix& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& loss_fn,
                        const Vector& params, double eps) {
  if (!(eps > 0.0)) {
    throw ConfigError("finite_diff_grad: eps must be positive");
  }
  Vector grad(params.size());
  Vector probe = params;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + eps;
    const double up = loss_fn(probe);
    probe[i] = params[i] - eps;
    const double down = loss_fn(probe);
    probe[i] = params[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite_diff_grad: non-finite loss at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace ssldr
