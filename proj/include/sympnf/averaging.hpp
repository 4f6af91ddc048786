// averaging.hpp : linearization of compact group actions by averaging.
//
// For a system-preserving map fixing the origin, generator_for builds the
// path R_t = lin(map) o S_t^{map^-1} (S_t the homothety path) and integrates
// its logarithmic derivative into a fibration-tangent field whose time-1 map
// is lin(map) o map^-1.  Averaging those generators over a finite group or a
// circle factor with Haar weights yields the conjugating map Phi_G.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sympnf/flows.hpp"

namespace sympnf::avg {

struct AveragingOptions {
  double tol = 1e-10;          // integrator tolerance
  int path_samples = 65;       // odd Simpson grid on [0, 1]
  std::vector<int> field_grid; // lattice per axis (default 49)
  flows::Box field_box;        // lattice sampling region (lattice mode)
  std::vector<Eigen::VectorXd> probes;  // probe set for checks
  double precheck_tol = 1e-6;
  double derivative_step = 2e-3;  // t-step for the on-demand path derivative
  bool verify_table = true;       // closure/inverses of finite groups

  // generator representation: on 2-dimensional charts with one moment
  // component the generators are stored as fiber profiles beta(c), which is
  // exact in the fiber directions; otherwise a phase-space lattice is used
  bool prefer_fiber = true;
  int fiber_nodes = 201;
  double band_margin = 0.15;  // widen the probe fiber band by this fraction

  // documented derivative bounds entering the residual budget
  double deriv_bound_t = 50.0;  // |d^4/dt^4 X_t|
  double deriv_bound_x = 50.0;  // spatial 4th derivatives of the profile
};

// documented residual budget:
//   dt^4/180 * deriv_bound_t   (Simpson in t, exact path derivatives)
// + h^4/24  * deriv_bound_x    (cubic interpolation, h = spatial spacing)
// + 100 * tol                  (integrator)
double residual_budget(const AveragingOptions& opts, double spatial_h);
// lattice-mode convenience: spacing from field_box / field_grid
double residual_budget(const AveragingOptions& opts);

// Jacobian at the origin; requires |map(0)| < tol
Eigen::MatrixXd linear_part(const flows::NumericMap& map, double tol = 1e-9);

// S_t^map = (1/t) (map o g_t) for t in (0, 1]; t = 0 returns the linear part
flows::NumericMap homothety_path(const flows::NumericMap& map, double t,
                                 double origin_tol = 1e-9);

// true when every moment component is homogeneous: F(s z) = s^d F(z) with a
// consistent integer degree d (sampled check); homothety paths require this
bool moment_is_homogeneous(const flows::MomentMap& moment,
                           const std::vector<Eigen::VectorXd>& samples,
                           std::vector<int>* degrees = nullptr);

struct GeneratorResult {
  flows::FieldPtr field;       // Psi-field of the map
  double endpoint_defect = 0;  // |exp(field) - lin(map) o map^-1| over probes
  double budget = 0;
};

// Psi-field for one system-preserving map fixing the origin
GeneratorResult generator_for(const flows::NumericMap& map,
                              const flows::MomentMap& moment,
                              const AveragingOptions& opts);

// ------------------------------------------------------------ group actions

class GroupActionSpec {
 public:
  // finite group given by its elements (must contain the identity)
  static GroupActionSpec finite(std::vector<flows::NumericMap> elements);
  // circle factor rho(theta), theta in [0, 1), sampled at `order` points
  static GroupActionSpec circle(
      std::function<flows::NumericMap(double)> generator, int order);

  const std::vector<flows::NumericMap>& elements() const { return elements_; }
  const std::vector<double>& weights() const { return weights_; }
  bool is_finite() const { return finite_; }

 private:
  std::vector<flows::NumericMap> elements_;
  std::vector<double> weights_;
  bool finite_ = true;
};

struct AveragingResult {
  flows::NumericMap phi;           // Phi_G, conjugates the action linear
  flows::FieldPtr generator;       // X_G
  std::vector<double> conjugation_residuals;  // per element, over probes
  double omega_residual = 0;
  double moment_residual = 0;
  double budget = 0;
  bool passed = false;
};

// X_G = sum of element generators with Haar weights; Phi_G = exp(X_G);
// verifies Phi_G o rho(g) = rho(g)^(1) o Phi_G on the probe set
AveragingResult average(const GroupActionSpec& action,
                        const flows::MomentMap& moment,
                        const AveragingOptions& opts);

// ------------------------------------------------------------- parametric

struct ParametricResult {
  std::vector<AveragingResult> per_parameter;
  // max over adjacent parameter pairs and probes of |Phi_p - Phi_p'|
  double continuity_modulus = 0;
  bool passed = false;
};

// family(p) must produce elements in a consistent order; the conjugation
// identity is checked against the parameter-zero linear parts rho_0(h)^(1)
ParametricResult average_parametric(
    const std::function<GroupActionSpec(const Eigen::VectorXd&)>& family,
    const std::vector<Eigen::VectorXd>& parameter_grid,
    const flows::MomentMap& moment, const AveragingOptions& opts);

}  // namespace sympnf::avg
