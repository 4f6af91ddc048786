// Test-only oracles, independent of the library implementation paths they
// check.

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace oracles {

// Symbolic-differentiation Poisson bracket for quadratics q_A(z) = z^T A z on
// the block chart (x_1..x_n, y_1..y_n) under the convention
// {f, g} = sum_i (f_{x_i} g_{y_i} - f_{y_i} g_{x_i}).
//
// The partial derivative of q_A along z_k is the linear form 2 A_k . z, so
// each bracket term is a product of two linear forms; (a.z)(b.z) has
// symmetric coefficient matrix (a b^T + b a^T) / 2.  No matrix algebra with
// J is involved, which keeps this an independent route.
inline Eigen::MatrixXd sym_bracket(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& B, int n) {
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  auto outer = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a * b.transpose() + b * a.transpose()) / 2.0;
  };
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd fx = 2.0 * A.row(i).transpose();        // d f / d x_i
    Eigen::VectorXd fy = 2.0 * A.row(n + i).transpose();    // d f / d y_i
    Eigen::VectorXd gx = 2.0 * B.row(i).transpose();
    Eigen::VectorXd gy = 2.0 * B.row(n + i).transpose();
    C += outer(fx, gy) - outer(fy, gx);
  }
  return C;
}

// Signed polygon area of a closed polyline (shoelace formula).
inline double shoelace(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return a / 2.0;
}

}  // namespace oracles
