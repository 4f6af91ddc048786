// quadratic.hpp : linear symplectic algebra over R^{2n}.
//
// Quadratic Hamiltonians are stored as q_A(z) = z^T A z with A symmetric and
// z in the block chart (x_1..x_n, y_1..y_n).  Under the project convention
// the linearized flow matrix is B = 2 J A, which lies in sp(2n, R), and
// {q_A, q_B} has coefficient matrix 2 (A J B - B J A).

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sympnf/phase.hpp"

namespace sympnf::quad {

struct QuadraticHamiltonian {
  SymplecticSpace space;
  Eigen::MatrixXd A;  // symmetric 2n x 2n

  QuadraticHamiltonian(SymplecticSpace s, const Eigen::MatrixXd& coeffs);

  double eval(const Eigen::VectorXd& z) const { return z.dot(A * z); }
};

struct QuadraticFamily {
  SymplecticSpace space;
  std::vector<QuadraticHamiltonian> members;

  QuadraticFamily(SymplecticSpace s, std::vector<QuadraticHamiltonian> m);
  int size() const { return static_cast<int>(members.size()); }
};

struct WilliamsonType {
  int k_e = 0, k_h = 0, k_f = 0;
  int m = 0;  // orbit rank
  int n = 0;  // degrees of freedom

  int corank() const { return n - m; }
};

// Validates k_e + k_h + 2 k_f = n - m.
WilliamsonType make_williamson(int k_e, int k_h, int k_f, int m, int n);

QuadraticHamiltonian poisson_bracket(const QuadraticHamiltonian& a,
                                     const QuadraticHamiltonian& b);

// B with linearized flow exp(tB); B in sp(2n, R)
Eigen::MatrixXd hamiltonian_matrix(const QuadraticHamiltonian& q);

struct ClassifyOptions {
  int trials = 5;
  double eps = 1e-8;
  std::uint64_t seed = 20040712;
};

struct NondegeneracyReport {
  bool ok = false;
  std::string failure;        // empty when ok
  double worst_bracket = 0.0;  // largest pairwise bracket coefficient
  double independence_sigma = 0.0;  // smallest singular value ratio
};

// Cartan-subalgebra test: pairwise commuting, linearly independent, and some
// generic combination is semisimple with no zero eigenvalue.
NondegeneracyReport is_nondegenerate(const QuadraticFamily& fam,
                                     const ClassifyOptions& opts = {});

struct ClassificationResult {
  WilliamsonType type;
  // eigenvalues of the generic combination from the first draw, sorted
  std::vector<std::complex<double>> eigenvalues;
};

// Williamson type of a reduced family: `fam` is the (n - m)-member family on
// the reduced space R^{2(n-m)}; m is the orbit rank it was reduced from.
ClassificationResult williamson_type(const QuadraticFamily& fam, int m,
                                     const ClassifyOptions& opts = {});

// Symplectic S with S^T J S = J such that every member pulled back by S
// (A -> S^T A S) is a linear combination of the model quadratics.
Eigen::MatrixXd normalizing_basis(const QuadraticFamily& fam,
                                  const ClassifyOptions& opts = {});

// ---------------------------------------------------------------- builders

// Model quadratics of the given type on the reduced space, in component
// order: k_e elliptic x_i^2 + y_i^2, then k_h hyperbolic x_i y_i, then k_f
// focus-focus pairs (x_i y_{i+1} - x_{i+1} y_i, x_i y_i + x_{i+1} y_{i+1}).
std::vector<QuadraticHamiltonian> model_family(int k_e, int k_h, int k_f);

// Convenience single blocks on R^{2n}: component index i is 1-based.
QuadraticHamiltonian elliptic_block(int n, int i);
QuadraticHamiltonian hyperbolic_block(int n, int i);
// the pair (h_i, h_{i+1}) occupying components i, i+1
std::pair<QuadraticHamiltonian, QuadraticHamiltonian> focus_focus_pair(int n,
                                                                       int i);

// Random symplectic matrix exp(J S) with S symmetric, entries ~ U(-a, a).
Eigen::MatrixXd random_symplectic(int n, double amplitude, std::uint64_t seed);

}  // namespace sympnf::quad
