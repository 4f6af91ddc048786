// counterexample.hpp : the nonresonant-but-degenerate integrable Hamiltonian
// at desk scale (n = 2, fixed point).
//
// Construction: Q(I) is linear with slope gamma away from small balls U_k
// where it is exactly linear with a nearby rational slope gamma^k (flat-glued
// plateaus).  H1 = Q(x_1^2 + y_1^2, ..., x_n^2 + y_n^2) has periodic flow
// over each inner plateau.  H2 adds, inside the plateau core of each region,
// a resonant perturbation
//
//   eps_k * bump_k(I) * ( mu f0 Dk(I)^2 + Re((x_j + i y_j)^a (x_l - i y_l)^b) )
//
// where a gamma^k_j = b gamma^k_l is the resonance, Dk is the normalized
// transverse action (detuning) and f0 a fixed amplitude scale.  Every term
// commutes with the resonant action K = b I_j + a I_l, which is a global
// first integral of H2; the reduced 1-DOF system on a K-level is a pendulum
// with a saddle, giving a hyperbolic periodic orbit inside the region.

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "sympnf/expr.hpp"
#include "sympnf/flows.hpp"

namespace sympnf::cex {

struct NonresonanceReport {
  bool nonresonant = false;
  Eigen::VectorXi worst_k;  // integer vector with the smallest |<k, gamma>|
  double worst_value = 0.0;
  int bound = 0;
  double threshold = 0.0;
};

// exhaustive search over nonzero integer vectors with |k_i| <= N
NonresonanceReport check_nonresonance(const Eigen::VectorXd& gamma, int N,
                                      double threshold);

struct PlateauRegion {
  Eigen::VectorXd center;  // c_k in the positive orthant of I-space
  double radius = 0.0;     // r_k; Q is gamma^k-linear inside radius/2
  std::vector<std::pair<long long, long long>> slope;  // gamma^k rationals
};

struct PlateauSpec {
  std::vector<PlateauRegion> regions;

  void validate(const Eigen::VectorXd& gamma) const;  // throws SpecError
};

// desk-scale spec: centers (0.5/k, ..., 0.5/k), radii 0.02/k^3, slopes from
// continued-fraction convergents of gamma (componentwise)
PlateauSpec desk_spec(const Eigen::VectorXd& gamma, int K);

// Q(I) = sum gamma_i I_i + sum_k chi_k(I) (sum (gamma^k_i - gamma_i) I_i + d_k)
// with d_k chosen so Q(c_k) matches the background linear function
expr::ExprPtr build_plateau_Q(const PlateauSpec& spec,
                              const Eigen::VectorXd& gamma);

struct RegionData {
  int a = 0, b = 0;       // resonance integers: a gamma_j = b gamma_l
  int j = 1, l = 2;       // 1-based components carrying the resonance
  double epsilon = 0.0;
  double mu = 0.0;
  double f0 = 0.0;        // amplitude scale of the cosine term at the center
  double support_radius = 0.0;   // bump support: |I - c_k| <= this (= r_k/2)
  expr::ExprPtr bump;            // flat cutoff in I variables
  expr::ExprPtr cos_term;        // Re((x_j + i y_j)^a (x_l - i y_l)^b)
  expr::ExprPtr witness;         // resonant action b I_j + a I_l, in x/y vars
  expr::ExprPtr perturbation;    // the full eps * bump * (...) term
};

struct PerturbedSystem {
  int n = 0;
  Eigen::VectorXd gamma;
  PlateauSpec spec;
  expr::ExprPtr Q;             // in I variables
  expr::ExprPtr H1, H2;        // in x/y variables
  std::vector<RegionData> regions;

  VarLayout layout() const { return VarLayout::xy_blocks(n); }
};

struct BuildOptions {
  double mu = 4.0;        // detuning weight in the perturbation
  int max_order = 64;     // reject resonances with a + b beyond this
};

PerturbedSystem build_H2(const PlateauSpec& spec, const Eigen::VectorXd& gamma,
                         const std::vector<double>& epsilons,
                         const BuildOptions& opts = {});

// exact quadratic coefficient matrix A with H(z) = z^T A z + O(|z|^3) at 0
Eigen::MatrixXd quadratic_part_at_zero(const expr::ExprPtr& e,
                                       const VarLayout& layout);

// max |H2 - H1| over sample points outside the union of the regions
double outside_support_residual(const PerturbedSystem& sys, int samples);

// structural check: every perturbation term carries a flat cutoff supported
// strictly inside its region ball (inspects the stored AST factors)
bool support_is_inside_regions(const PerturbedSystem& sys);

struct FloquetReport {
  bool found = false;
  bool hyperbolic = false;
  std::vector<std::complex<double>> multipliers;
  double multiplier_product = 0.0;
  double lambda_max = 0.0;      // largest real multiplier modulus
  Eigen::VectorXd orbit_point;
  double period = 0.0;
  double orbit_residual = 0.0;  // |phi_T(z) - z|
  std::string diagnostics;
};

struct DetectOptions {
  double tol = 1e-2;            // hyperbolicity margin |lambda| > 1 + tol
  double integrator_tol = 1e-11;
  int max_newton = 40;
  double newton_tol = 1e-10;
};

// Newton shooting for a periodic orbit of H2 inside region k, seeded at the
// pendulum saddle predicted by the resonant reduction
FloquetReport detect_hyperbolic_orbit(const PerturbedSystem& sys, int k,
                                      const DetectOptions& opts = {});

// predicted saddle exponent nu of the reduced pendulum and the orbit period
// T; the oracle multiplier is exp(nu T)
struct PendulumOracle {
  double nu = 0.0;
  double period = 0.0;
  double lambda = 0.0;
};
PendulumOracle pendulum_oracle(const PerturbedSystem& sys, int k);

// max |{H2, W}| over probe points with I in the region ball, where W is the
// region's resonant first integral b I_j + a I_l
double verify_integrability_witness(const PerturbedSystem& sys, int k,
                                    int probe_count = 64);

// same residual for an arbitrary witness expression over given points
double bracket_residual_at(const expr::ExprPtr& hamiltonian,
                           const expr::ExprPtr& witness,
                           const VarLayout& layout,
                           const std::vector<Eigen::VectorXd>& points);

// phase points whose actions I lie in the region ball (deterministic)
std::vector<Eigen::VectorXd> region_probes(const PerturbedSystem& sys, int k,
                                           int count, double radius_fraction);

// section scatter rows (t, x1, x2, y2) at y1 = 0 downward crossings for a
// few trajectories near the region-k resonance
std::vector<Eigen::VectorXd> poincare_scatter(const PerturbedSystem& sys,
                                              int k, int trajectories,
                                              int crossings_per_trajectory);

}  // namespace sympnf::cex
