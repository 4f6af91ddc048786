// flows.hpp : Hamiltonian vector fields, adaptive integration, numeric maps,
// and the exponential / path-inverse machinery on fibration-preserving
// fields.
//
// A NumericMap is a composition of primitives (affine symplectic maps and
// time-t flow maps).  It is evaluable and differentiable at points, and its
// inverse is the reversed pipeline with each primitive inverted.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sympnf/expr.hpp"
#include "sympnf/phase.hpp"

namespace sympnf::flows {

// ------------------------------------------------------------------- boxes

struct Box {
  Eigen::VectorXd lo, hi;

  bool contains(const Eigen::VectorXd& z, double margin = 0.0) const {
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (z(i) < lo(i) - margin || z(i) > hi(i) + margin) return false;
    return true;
  }
  static Box cube(int dim, double radius) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(dim, -radius);
    b.hi = Eigen::VectorXd::Constant(dim, radius);
    return b;
  }
};

// ------------------------------------------------------------------ fields

class Field {
 public:
  virtual ~Field() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd value(const Eigen::VectorXd& z) const = 0;
  virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const = 0;
};

using FieldPtr = std::shared_ptr<const Field>;

// X_H = J grad H for an expression Hamiltonian
class HamiltonianField : public Field {
 public:
  HamiltonianField(expr::ExprPtr hamiltonian, const VarLayout& layout);

  int dim() const override { return layout_.dim(); }
  Eigen::VectorXd value(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;

  const expr::ExprPtr& hamiltonian() const { return source_; }
  const VarLayout& layout() const { return layout_; }
  double hamiltonian_value(const Eigen::VectorXd& z) const {
    return compiled_.value(z);
  }

 private:
  expr::ExprPtr source_;
  VarLayout layout_;
  expr::Compiled compiled_;
  Eigen::MatrixXd J_;
};

// weighted sum of fields on a shared space
class SumField : public Field {
 public:
  SumField(std::vector<FieldPtr> parts, std::vector<double> weights);

  int dim() const override;
  Eigen::VectorXd value(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;

 private:
  std::vector<FieldPtr> parts_;
  std::vector<double> weights_;
};

// z -> M z (used for matrix-logarithm style references)
class LinearField : public Field {
 public:
  explicit LinearField(Eigen::MatrixXd M) : M_(std::move(M)) {}
  int dim() const override { return static_cast<int>(M_.rows()); }
  Eigen::VectorXd value(const Eigen::VectorXd& z) const override {
    return M_ * z;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd&) const override { return M_; }

 private:
  Eigen::MatrixXd M_;
};

// Field sampled on a rectangular lattice with separable Catmull-Rom cubic
// interpolation.  Evaluation outside the box is an error.
class SampledField : public Field {
 public:
  SampledField(Box box, std::vector<int> resolution,
               std::vector<Eigen::VectorXd> node_values);

  int dim() const override { return static_cast<int>(box_.lo.size()); }
  Eigen::VectorXd value(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;

  const Box& box() const { return box_; }
  const std::vector<int>& resolution() const { return res_; }
  const std::vector<Eigen::VectorXd>& node_data() const { return data_; }

  // lattice node coordinates, helper for builders
  static std::vector<Eigen::VectorXd> lattice(const Box& box,
                                              const std::vector<int>& res);

 private:
  Box box_;
  std::vector<int> res_;
  std::vector<Eigen::VectorXd> data_;  // node-major, row-major multi-index
};

// On a 1-DOF chart every fibration-tangent Hamiltonian field is
// beta(h(z)) X_h(z) for a scalar profile beta on the fiber values, possibly
// differing between the connected components (quadrant branches) of the
// fibers.  FiberSampledField stores the sampled profiles; this represents
// flat Hamiltonians far more accurately than any phase-space lattice.
enum class FiberBranchMode { Single, Quadrant };

class FiberSampledField : public Field {
 public:
  struct Branch {
    int sign_x = 1, sign_y = 1;   // quadrant key (ignored in Single mode)
    std::vector<double> betas;    // profile on the shared uniform c-grid
  };

  FiberSampledField(expr::ExprPtr fibration, const VarLayout& layout,
                    FiberBranchMode mode, double c_lo, double c_hi,
                    std::vector<Branch> branches);

  int dim() const override { return 2; }
  Eigen::VectorXd value(const Eigen::VectorXd& z) const override;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const override;

  double c_lo() const { return c_lo_; }
  double c_hi() const { return c_hi_; }
  // worst off-fiber component seen while sampling (set by the builder)
  double tangency_residual = 0.0;

 private:
  const Branch& branch_at(const Eigen::VectorXd& z) const;
  std::pair<double, double> beta_at(const Branch& b, double c) const;

  expr::ExprPtr source_;
  expr::Compiled h_;
  Eigen::MatrixXd J_;
  FiberBranchMode mode_;
  double c_lo_, c_hi_;
  std::vector<Branch> branches_;
};

// --------------------------------------------------------------- moment map

// A tuple of scalar first integrals (the fibration) on a fixed chart.
class MomentMap {
 public:
  MomentMap() = default;
  MomentMap(std::vector<expr::ExprPtr> components, const VarLayout& layout);

  int size() const { return static_cast<int>(comps_.size()); }
  const VarLayout& layout() const { return layout_; }
  const std::vector<expr::ExprPtr>& sources() const { return sources_; }

  Eigen::VectorXd eval(const Eigen::VectorXd& z) const;
  // gradient of component j
  Eigen::VectorXd gradient(int j, const Eigen::VectorXd& z) const;

 private:
  std::vector<expr::ExprPtr> sources_;
  std::vector<expr::Compiled> comps_;
  VarLayout layout_;
};

// |{H, F_j}| maximized over probe points and components
double bracket_residual(const HamiltonianField& field, const MomentMap& moment,
                        const std::vector<Eigen::VectorXd>& probes);

// ------------------------------------------------------------- integration

struct FlowOptions {
  double tol = 1e-10;
  std::optional<Box> domain;     // escape detection when set
  double initial_step = 1e-3;
  std::size_t max_steps = 5'000'000;
};

// time-t flow of a field (adaptive Dormand-Prince 5(4))
Eigen::VectorXd flow(const Field& field, double t, const Eigen::VectorXd& pt,
                     const FlowOptions& opts = {});

// flow together with the Jacobian of the time-t map (variational equations)
std::pair<Eigen::VectorXd, Eigen::MatrixXd> flow_with_jacobian(
    const Field& field, double t, const Eigen::VectorXd& pt,
    const FlowOptions& opts = {});

// low-level stepping access; callback returns false to stop integration at
// the current accepted step.  Used by cycle tracing and section returns.
void integrate_steps(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& rhs,
    double t0, double t1, const Eigen::VectorXd& y0, const FlowOptions& opts,
    const std::function<bool(double t, const Eigen::VectorXd& y)>& on_step);

// ------------------------------------------------------------- numeric maps

struct AffinePrimitive {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

struct FlowPrimitive {
  FieldPtr field;
  double time = 0.0;
  double tol = 1e-10;
};

using Primitive = std::variant<AffinePrimitive, FlowPrimitive>;

class NumericMap {
 public:
  NumericMap() = default;
  NumericMap(VarLayout layout, std::vector<Primitive> pipeline);

  static NumericMap identity(const VarLayout& layout);
  static NumericMap linear(const VarLayout& layout, const Eigen::MatrixXd& A,
                           const Eigen::VectorXd& b);
  static NumericMap linear(const VarLayout& layout, const Eigen::MatrixXd& A);
  static NumericMap flow_step(const VarLayout& layout, FieldPtr field,
                              double time, double tol = 1e-10);
  // g then f (composition f after g)
  static NumericMap compose(const NumericMap& f, const NumericMap& g);

  const VarLayout& layout() const { return layout_; }
  const std::vector<Primitive>& pipeline() const { return pipeline_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& z) const;
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const;
  NumericMap inverse() const;

  // max over probes of ||Dphi^T J Dphi - J||_inf
  double omega_residual(const std::vector<Eigen::VectorXd>& probes) const;
  // max over probes and components of |F(phi(z)) - F(z)|
  double moment_residual(const MomentMap& moment,
                         const std::vector<Eigen::VectorXd>& probes) const;
  // symplecticity of every primitive separately, worst case over probes
  double primitive_omega_residual(
      const std::vector<Eigen::VectorXd>& probes) const;

 private:
  VarLayout layout_;
  std::vector<Primitive> pipeline_;
};

// ------------------------------------------------------------- exponential

struct ExpOptions {
  double tol = 1e-10;
  double precheck_tol = 1e-7;  // bracket residual threshold
  int precheck_points = 32;
  Box precheck_box;  // quasi-random probe region for the tangency check
};

// time-1 map of a fibration-tangent Hamiltonian field; the tangency
// precheck runs against the supplied moment map.
NumericMap exponential(const std::shared_ptr<const HamiltonianField>& field,
                       const MomentMap& moment, const ExpOptions& opts);

// max over pts of |flow_{f1+f2}(s) - flow_{f1}(s) o flow_{f2}(s)|
double verify_commuting_flows(
    const std::shared_ptr<const HamiltonianField>& f1,
    const std::shared_ptr<const HamiltonianField>& f2, const MomentMap& moment,
    double s, const std::vector<Eigen::VectorXd>& pts, const ExpOptions& opts);

// ------------------------------------------------------------ paths of maps

struct PathOfMaps {
  std::vector<double> ts;        // increasing uniform grid on [0,1]
  std::vector<NumericMap> maps;  // maps[i] at ts[i]; maps[0] = identity
  // optional exact time derivative (t, x) -> dR_t/dt (x); when absent the
  // path is differentiated by finite differences on the sample grid
  std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)> derivative;
};

struct PathToFieldOptions {
  double tol = 1e-10;
  std::vector<int> grid;          // lattice resolution per axis (default 33)
  bool check_membership = true;   // probe the samples for omega/moment
  int membership_probes = 4;
  double membership_tol = 1e-6;
};

struct FiberFieldOptions {
  double tol = 1e-10;
  double c_lo = 0.0, c_hi = 0.0;  // fiber-value band to sample
  int nodes = 129;
  FiberBranchMode mode = FiberBranchMode::Quadrant;
  bool check_membership = true;
  int membership_probes = 4;
  double membership_tol = 1e-6;
};

// Y(w) = int_0^1 X_t(w) dt at a single point, by composite Simpson over the
// sample grid; X_t = (dR_t/dt) o R_t^{-1}.
Eigen::VectorXd path_field_value(const PathOfMaps& path,
                                 const std::vector<NumericMap>& inverses,
                                 const Eigen::VectorXd& w);

// Builds the averaged generator field on a lattice over `box`.
std::shared_ptr<SampledField> path_to_field(const PathOfMaps& path,
                                            const MomentMap& moment,
                                            const Box& box,
                                            const PathToFieldOptions& opts);

// 1-DOF variant: reconstructs the generator as fiber profiles beta(c) per
// branch (requires a single-component moment map on a dimension-2 chart)
std::shared_ptr<FiberSampledField> path_to_fiber_field(
    const PathOfMaps& path, const MomentMap& moment,
    const FiberFieldOptions& opts);

// quasi-random probe cloud in a box (deterministic)
std::vector<Eigen::VectorXd> probe_cloud(const Box& box, std::size_t count);

}  // namespace sympnf::flows
