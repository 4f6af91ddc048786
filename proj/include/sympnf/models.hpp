// models.hpp : the linear models V = D^m x T^m x D^{2(n-m)}, their twisting
// groups, automorphisms, and structure checks for system-preserving maps.
//
// Model charts use the layout (p_1..p_m, q_1..q_m, x_1, y_1, ..., x_k, y_k)
// with k = n - m; ModelPoint stores the (x, y) part interleaved the same
// way.  Torus coordinates q_i live mod 1.

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sympnf/flows.hpp"
#include "sympnf/quadratic.hpp"

namespace sympnf::models {

// exact rational q-shift, normalized into [0, 1)
struct Rational {
  long long num = 0;
  long long den = 1;

  static Rational mod1(long long n, long long d);
  Rational plus(const Rational& o) const;
  bool is_zero() const { return num == 0; }
  double value() const { return static_cast<double>(num) / den; }
  bool operator==(const Rational& o) const {
    return num == o.num && den == o.den;
  }
};

struct TwistGenerator {
  std::vector<int> flips;             // 1-based hyperbolic component indices
  std::vector<Rational> translation;  // m entries
};

struct GroupElement {
  std::vector<bool> flips;         // size k_h
  std::vector<Rational> trans;     // size m
  bool is_identity() const;
};

// finite abelian group generated by hyperbolic sign flips and rational torus
// translations; closure is enumerated at construction
class TwistingGroup {
 public:
  static TwistingGroup trivial(int k_h, int m);
  static TwistingGroup generated(const std::vector<TwistGenerator>& gens,
                                 int k_h, int m);

  int size() const { return static_cast<int>(elements_.size()); }
  const std::vector<GroupElement>& elements() const { return elements_; }
  int k_h() const { return k_h_; }
  int m() const { return m_; }

 private:
  std::vector<GroupElement> elements_;
  int k_h_ = 0, m_ = 0;
};

struct ModelPoint {
  Eigen::VectorXd p;   // size m
  Eigen::VectorXd q;   // size m, mod 1
  Eigen::VectorXd xy;  // size 2(n-m), interleaved (x1, y1, x2, y2, ...)
};

class LinearModel {
 public:
  // radii default to 1; gamma must act freely (checked by orbit enumeration
  // at a generic point and at xy = 0)
  LinearModel(int n, int m, const quad::WilliamsonType& wtype,
              TwistingGroup gamma, double p_radius = 1.0,
              double xy_radius = 1.0);

  int n() const { return n_; }
  int m() const { return m_; }
  int corank() const { return n_ - m_; }
  const quad::WilliamsonType& wtype() const { return wtype_; }
  const TwistingGroup& gamma() const { return gamma_; }
  double p_radius() const { return p_radius_; }
  double xy_radius() const { return xy_radius_; }

  VarLayout layout() const { return VarLayout::model(m_, n_ - m_); }
  // (p_1, ..., p_m, h_1, ..., h_{n-m}) as expressions on the model chart
  flows::MomentMap moment() const;

  Eigen::VectorXd flatten(const ModelPoint& pt) const;
  ModelPoint unflatten(const Eigen::VectorXd& z) const;
  // wraps q into [0, 1) and validates the disk radii
  ModelPoint canonicalize_chart(const ModelPoint& pt) const;

 private:
  int n_, m_;
  quad::WilliamsonType wtype_;
  TwistingGroup gamma_;
  double p_radius_, xy_radius_;
};

// (p_1, ..., p_m, h_1, ..., h_{n-m}) at a point; domain-checked
Eigen::VectorXd moment_map(const LinearModel& model, const ModelPoint& pt);

// element action: sign flips on hyperbolic pairs plus torus translation
ModelPoint apply_group_element(const LinearModel& model, const GroupElement& g,
                               const ModelPoint& pt);

// canonical representative of the Gamma-orbit (lexicographic minimum of the
// tuple (q, xy, p) under exact coordinate comparison); idempotent
ModelPoint quotient_canonicalize(const LinearModel& model,
                                 const ModelPoint& pt);

struct ModelAutomorphism {
  Eigen::VectorXd torus_translation;  // m, mod 1
  Eigen::VectorXd elliptic_angles;    // k_e, radians
  Eigen::VectorXd hyperbolic_log;     // k_h
  std::vector<int> hyperbolic_sign;   // k_h entries in {+1, -1}
  Eigen::VectorXd ff_log;             // k_f
  Eigen::VectorXd ff_angle;           // k_f, radians

  static ModelAutomorphism identity(const LinearModel& model);
  // abelian group law, exact on parameters
  static ModelAutomorphism compose(const LinearModel& model,
                                   const ModelAutomorphism& a,
                                   const ModelAutomorphism& b);
};

ModelPoint apply_automorphism(const LinearModel& model,
                              const ModelAutomorphism& a, const ModelPoint& pt);

// the same automorphism as an affine NumericMap on the flattened chart
flows::NumericMap automorphism_to_map(const LinearModel& model,
                                      const ModelAutomorphism& a);

// flow of the Hamiltonian sum_i direction_i p_i for time t: a torus
// translation q -> q + t * direction (mod 1)
ModelPoint torus_action_flow(const LinearModel& model,
                             const Eigen::VectorXd& direction, double t,
                             const ModelPoint& pt);

// ------------------------------------------------- structure verification

struct MapStructureReport {
  bool system_preserving = false;  // omega + moment precheck
  double omega_residual = 0.0;
  double moment_residual = 0.0;
  // q-translation diagnostics (empty model torus -> zeros)
  double translation_scatter = 0.0;     // within fixed p-slices
  double translation_p_variation = 0.0; // across p-slices
  double fiber_linear_deviation = 0.0;  // fiber part vs its linear part at 0
  bool passed = false;
  std::string note;
};

struct StructureOptions {
  int grid_per_axis = 9;
  double eps = 1e-8;
  double domain_fraction = 0.7;  // grid covers this fraction of the radii
  std::size_t max_grid_points = 100000;
  int omega_probe_count = 8;
};

// decomposes each map at grid points into (p-fixed, q-translation, fiber
// part); a map passes iff the translation variation over p and the fiber
// deviation from its linear part at xy = 0 both stay below eps
std::vector<MapStructureReport> verify_linear_action_structure(
    const LinearModel& model, const std::vector<flows::NumericMap>& maps,
    const StructureOptions& opts = {});

}  // namespace sympnf::models
