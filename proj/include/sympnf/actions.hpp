// actions.hpp : Mineur action integrals for 1-DOF systems and products.
//
// Cycles are traced by flowing X_H and detecting the return of the polar
// angle around the origin (the Poincare half-line through the start point).
// Actions are line integrals of a primitive of the area form, accumulated as
// extra quadrature variables of the same adaptive integration.
//
// Orientation: cycles are oriented by the Hamiltonian flow.  Under the
// project sign convention the elliptic flow runs clockwise, so the three
// primitive tags are normalized with d(beta) = dy ^ dx; this makes elliptic
// actions positive (p(E) = pi E for H = x^2 + y^2).

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sympnf/expr.hpp"
#include "sympnf/flows.hpp"

namespace sympnf::actions {

enum class PrimitiveTag {
  YdX,       // beta = y dx
  MinusXdY,  // beta = -x dy
  Mixed      // beta = (y dx - x dy) / 2
};

// coefficient c in d(beta) = c dy ^ dx; all three tags give c = 1
double primitive_curl(PrimitiveTag tag);

struct PlanarSystem {
  expr::ExprPtr H;  // expression in x1, y1
  flows::Box domain;
  PrimitiveTag tag = PrimitiveTag::YdX;

  static PlanarSystem make(const std::string& hamiltonian, double box_radius,
                           PrimitiveTag tag = PrimitiveTag::YdX);
};

struct TraceOptions {
  double tol = 1e-11;
  double grad_min = 1e-6;  // regularity threshold on |grad H|
  double max_time = 500.0;
  Eigen::Vector2d seed_direction{1.0, 0.0};
};

struct CycleTrace {
  std::vector<Eigen::Vector2d> points;  // closed polyline (accepted steps)
  double period = 0.0;
  double closure_gap = 0.0;
  double grad_min_seen = 0.0;
  double action_ydx = 0.0;
  double action_mxdy = 0.0;
  double action_mixed = 0.0;

  double action(PrimitiveTag tag) const;
  // max pairwise spread between the three tags (Stokes check)
  double tag_spread() const;
};

// closed orbit at energy E; throws RegularityError at critical values and
// OpenCycleError when the trace escapes or fails to close
CycleTrace trace_cycle(const PlanarSystem& sys, double E,
                       const TraceOptions& opts = {});

// line integral of the chosen primitive over the traced cycle
double action_integral(const PlanarSystem& sys, double E,
                       const TraceOptions& opts = {});

struct ActionProfile {
  std::vector<double> energies;
  std::vector<double> actions;
  std::vector<double> periods;       // orbital period T(E)
  std::vector<double> dpdE;          // finite differences of actions
  std::vector<double> dpdE_noise;    // 3-point vs 5-point disagreement
  bool monotone = false;
};

ActionProfile action_profile(const PlanarSystem& sys,
                             const std::vector<double>& energies,
                             const TraceOptions& opts = {});

struct PeriodOneReport {
  bool conclusive = false;
  bool passed = false;
  double max_duality_residual = 0.0;   // |dp/dE - T| / T
  double max_return_residual = 0.0;    // |return time of X_p - 1|
  std::vector<double> return_times;
};

// dp/dE equals the orbital period, and the flow of the action function
// (field dp/dE(E) * X_H on each level) returns in time 1
PeriodOneReport verify_period_one(const PlanarSystem& sys,
                                  const ActionProfile& profile, double tol,
                                  const TraceOptions& opts = {});

// componentwise actions of a product of 1-DOF blocks
std::vector<double> product_actions(const std::vector<PlanarSystem>& systems,
                                    const std::vector<double>& energies,
                                    const TraceOptions& opts = {});

}  // namespace sympnf::actions
