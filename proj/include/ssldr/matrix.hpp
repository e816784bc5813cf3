#ifndef SSLDR_MATRIX_HPP
#define SSLDR_MATRIX_HPP

#include <Eigen/Dense>
#include <functional>

#include "ssldr/errors.hpp"

namespace ssldr {

// All numeric work is done in dense 64-bit floats. Matrices are row-major so
// that a matrix row (a drug's association profile) is contiguous.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Matrix product with an explicit conformability check. Eigen would assert;
// callers here want a catchable error naming both shapes.
Matrix matmul(const Matrix& a, const Matrix& b);

// Overflow-safe logistic. Output is strictly inside (0, 1) for every finite
// input: saturated values are nudged off the endpoints so downstream logs
// stay finite.
double sigmoid(double x);
Matrix sigmoid(const Matrix& x);
Vector sigmoid(const Vector& x);

// Derivative of the logistic expressed through its output: s * (1 - s).
inline double sigmoid_grad_from_output(double s) { return s * (1.0 - s); }

// Central-difference gradient of `loss_fn` at `params`:
//   g_i = (L(p + eps e_i) - L(p - eps e_i)) / (2 eps)
// Throws NumericError (with the coordinate index) if a perturbed evaluation
// is non-finite. This is the validation oracle for every analytic gradient
// in the project and must stay independent of any backward pass.
Vector finite_diff_grad(const std::function<double(const Vector&)>& loss_fn,
                        const Vector& params, double eps);

// Guarded relative difference used by gradient checks: |a-b| scaled by the
// magnitudes, floored so that near-zero pairs are compared absolutely.
inline double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b));
}

}  // namespace ssldr

#endif  // SSLDR_MATRIX_HPP
