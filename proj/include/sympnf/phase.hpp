// phase.hpp : phase-space coordinate layouts and the fixed sign convention.
//
// Convention, used everywhere in this project:
//   omega   = sum_i dx_i ^ dy_i           (and dp_i ^ dq_i on model spaces)
//   X_H     = (dx_i/dt, dy_i/dt) with  dx_i/dt = dH/dy_i,  dy_i/dt = -dH/dx_i
//   {f, g}  = sum_i (f_{x_i} g_{y_i} - f_{y_i} g_{x_i}) = (grad f)^T J (grad g)
//
// J below is the matrix with X_H = J grad H; it satisfies J^2 = -I, J^T = -J,
// and doubles as the coordinate matrix of omega: omega(u, v) = u^T J v.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "sympnf/errors.hpp"

namespace sympnf {

// A named coordinate chart together with its canonical pairing.
// pairs[k] = (a, b) means omega contains da ^ db, i.e. J e_b = e_a and
// J e_a = -e_b.
struct VarLayout {
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> pairs;

  int dim() const { return static_cast<int>(names.size()); }

  // (x_1..x_n, y_1..y_n): used for quadratic Hamiltonians and plain flows
  static VarLayout xy_blocks(int n) {
    VarLayout L;
    for (int i = 1; i <= n; ++i) L.names.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) L.names.push_back("y" + std::to_string(i));
    for (int i = 0; i < n; ++i) L.pairs.emplace_back(i, n + i);
    return L;
  }

  // (p_1..p_m, q_1..q_m, x_1, y_1, ..., x_k, y_k): linear-model charts,
  // with the (x, y) part interleaved pairwise
  static VarLayout model(int m, int k) {
    VarLayout L;
    for (int i = 1; i <= m; ++i) L.names.push_back("p" + std::to_string(i));
    for (int i = 1; i <= m; ++i) L.names.push_back("q" + std::to_string(i));
    for (int j = 1; j <= k; ++j) {
      L.names.push_back("x" + std::to_string(j));
      L.names.push_back("y" + std::to_string(j));
    }
    for (int i = 0; i < m; ++i) L.pairs.emplace_back(i, m + i);
    for (int j = 0; j < k; ++j)
      L.pairs.emplace_back(2 * m + 2 * j, 2 * m + 2 * j + 1);
    return L;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<int>(i);
    return -1;
  }

  Eigen::MatrixXd J() const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim(), dim());
    for (auto [a, b] : pairs) {
      M(a, b) = 1.0;
      M(b, a) = -1.0;
    }
    return M;
  }

  bool operator==(const VarLayout& o) const {
    return names == o.names && pairs == o.pairs;
  }
};

// Ambient standard symplectic R^{2n} in the block chart.
struct SymplecticSpace {
  int n;

  explicit SymplecticSpace(int dof) : n(dof) {
    if (n < 1) throw DimensionError("SymplecticSpace: n must be >= 1");
  }

  int dim() const { return 2 * n; }
  VarLayout layout() const { return VarLayout::xy_blocks(n); }
  Eigen::MatrixXd J() const { return layout().J(); }

  bool operator==(const SymplecticSpace& o) const { return n == o.n; }
};

}  // namespace sympnf
