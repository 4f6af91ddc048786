#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sympnf/averaging.hpp"
#include "sympnf/rng.hpp"

using namespace sympnf;
using namespace sympnf::avg;
using flows::Box;
using flows::NumericMap;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd vec2(double x, double y) {
  VectorXd v(2);
  v << x, y;
  return v;
}

std::shared_ptr<const flows::HamiltonianField> field_of(const std::string& h,
                                                        int n) {
  return std::make_shared<flows::HamiltonianField>(expr::parse(h),
                                                   VarLayout::xy_blocks(n));
}

flows::MomentMap moment_of(const std::string& comp, int n) {
  return flows::MomentMap({expr::parse(comp)}, VarLayout::xy_blocks(n));
}

// probes on hyperbolas xy = c in a band away from the separatrix
std::vector<VectorXd> hyperbolic_probes(int count, double c_lo, double c_hi) {
  std::vector<VectorXd> out;
  for (int i = 0; i < count; ++i) {
    double x = 0.65 + 0.4 * halton(i + 1, 2);
    double c = c_lo + (c_hi - c_lo) * halton(i + 1, 3);
    out.push_back(vec2(x, c / x));
  }
  return out;
}

AveragingOptions quick_options() {
  AveragingOptions o;
  o.tol = 1e-10;
  o.path_samples = 65;
  o.fiber_nodes = 101;
  o.field_grid = {25, 25};
  o.field_box = Box{vec2(0.35, 0.15), vec2(1.35, 1.05)};
  o.probes = hyperbolic_probes(6, 0.3, 0.55);
  return o;
}

// the flat piecewise function of the nonabelian example
const char* kPsi = "piecewise(x1 >= 0, flat_exp(x1*y1), 2*flat_exp(x1*y1))";
// its odd part: changes sign under the central involution
const char* kOdd = "piecewise(x1 >= 0, flat_exp(x1*y1), -flat_exp(x1*y1))";

}  // namespace

TEST_CASE("linear part of a linear map is its matrix") {
  VarLayout L = VarLayout::xy_blocks(1);
  MatrixXd R(2, 2);
  R << 0.6, -0.8, 0.8, 0.6;
  CHECK((linear_part(NumericMap::linear(L, R)) - R).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("linear part requires a fixed origin") {
  VarLayout L = VarLayout::xy_blocks(1);
  NumericMap shift =
      NumericMap::linear(L, MatrixXd::Identity(2, 2), vec2(0.1, 0.0));
  CHECK_THROWS_AS(linear_part(shift), PreconditionError);
}

TEST_CASE("linear part of the flat flow is the identity") {
  VarLayout L = VarLayout::xy_blocks(1);
  NumericMap phi = NumericMap::flow_step(L, field_of(kPsi, 1), 1.0, 1e-11);
  MatrixXd Lp = linear_part(phi);
  CHECK((Lp - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("linear part obeys the chain rule for sigma o L") {
  VarLayout L = VarLayout::xy_blocks(1);
  MatrixXd R(2, 2);
  double th = 0.4;
  R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  auto f = field_of("0.3*(x1^2 + y1^2)", 1);
  NumericMap sigma = NumericMap::flow_step(L, f, 1.0, 1e-11);
  MatrixXd dsigma = linear_part(sigma);
  NumericMap comp = NumericMap::compose(sigma, NumericMap::linear(L, R));
  CHECK((linear_part(comp) - dsigma * R).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("homothety path properties") {
  VarLayout L = VarLayout::xy_blocks(1);
  auto probes = hyperbolic_probes(5, 0.3, 0.5);
  SUBCASE("linear maps are fixed points of the path") {
    MatrixXd A(2, 2);
    A << 2.0, 0.0, 0.0, 0.5;
    NumericMap lin = NumericMap::linear(L, A);
    for (double t : {0.25, 0.7, 1.0}) {
      NumericMap st = homothety_path(lin, t);
      for (const auto& z : probes)
        CHECK((st.apply(z) - lin.apply(z)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("t = 1 returns the map; small t passes the membership probes") {
    NumericMap phi = NumericMap::flow_step(L, field_of(kPsi, 1), 1.0, 1e-11);
    NumericMap s1 = homothety_path(phi, 1.0);
    for (const auto& z : probes)
      CHECK((s1.apply(z) - phi.apply(z)).cwiseAbs().maxCoeff() < 1e-11);

    NumericMap sq = homothety_path(phi, 0.25);
    auto moment = moment_of("x1*y1", 1);
    CHECK(sq.omega_residual(probes) < 1e-7);
    CHECK(sq.moment_residual(moment, probes) < 1e-8);
    // and differs from the map itself at generic points
    double dev = 0.0;
    for (const auto& z : probes)
      dev = std::max(dev, (sq.apply(z) - phi.apply(z)).cwiseAbs().maxCoeff());
    CHECK(dev > 1e-4);
  }
}

TEST_CASE("moment homogeneity gate") {
  auto probes = hyperbolic_probes(6, 0.3, 0.5);
  CHECK(moment_is_homogeneous(moment_of("x1*y1", 1), probes));
  std::vector<int> deg;
  CHECK(moment_is_homogeneous(moment_of("x1^2 + y1^2", 1), probes, &deg));
  CHECK(deg[0] == 2);
  CHECK_FALSE(moment_is_homogeneous(moment_of("x1*y1 + x1", 1), probes));
}

TEST_CASE("generator of the identity is the zero field") {
  AveragingOptions o = quick_options();
  auto moment = moment_of("x1*y1", 1);
  NumericMap id = NumericMap::identity(VarLayout::xy_blocks(1));
  GeneratorResult gen = generator_for(id, moment, o);
  for (const auto& z : o.probes)
    CHECK(gen.field->value(z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("generator of exp(X_f) recovers -X_f for f = (xy)^3") {
  AveragingOptions o = quick_options();
  auto moment = moment_of("x1*y1", 1);
  auto f = field_of("(x1*y1)^3", 1);
  NumericMap phi =
      NumericMap::flow_step(VarLayout::xy_blocks(1), f, 1.0, 1e-11);
  GeneratorResult gen = generator_for(phi, moment, o);
  // closed loop: exp(field) o phi = linear part = identity
  CHECK(gen.endpoint_defect < gen.budget);
  // and pointwise the field is -X_f
  for (const auto& z : o.probes) {
    VectorXd err = gen.field->value(z) + f->value(z);
    CHECK(err.cwiseAbs().maxCoeff() < gen.budget);
  }
}

TEST_CASE("averaging the Z/2 action from the flat conjugation") {
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  auto moment = moment_of("x1*y1", 1);
  MatrixXd I = -MatrixXd::Identity(2, 2);

  auto psi = field_of(kPsi, 1);
  NumericMap sigma = NumericMap::flow_step(L, psi, 1.0, 1e-11);
  NumericMap rho = NumericMap::compose(
      sigma, NumericMap::compose(NumericMap::linear(L, I), sigma.inverse()));
  GroupActionSpec action =
      GroupActionSpec::finite({NumericMap::identity(L), rho});

  AveragingResult res = average(action, moment, o);
  CHECK(res.passed);
  CHECK(res.conjugation_residuals[1] < res.budget);
  CHECK(res.omega_residual < 1e-6);
  CHECK(res.moment_residual < 1e-6);

  // negative control: rho itself violates the linear-conjugation identity
  double raw = 0.0;
  for (const auto& w : o.probes)
    raw = std::max(raw, (rho.apply(w) - I * w).cwiseAbs().maxCoeff());
  CHECK(raw > 1e-2);

  // the independently known conjugator sigma^{-1} induces the same linear
  // action: sigma^{-1} o rho o sigma = I exactly
  NumericMap conj = NumericMap::compose(
      sigma.inverse(), NumericMap::compose(rho, sigma));
  for (const auto& w : o.probes)
    CHECK((conj.apply(w) - I * w).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("averaging rejects elements that break the system") {
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  auto moment = moment_of("x1*y1", 1);
  MatrixXd S = 1.3 * MatrixXd::Identity(2, 2);  // not symplectic
  GroupActionSpec bad =
      GroupActionSpec::finite({NumericMap::identity(L), NumericMap::linear(L, S)});
  CHECK_THROWS_AS(average(bad, moment, o), NotSystemPreservingError);
}

TEST_CASE("linear actions average to the identity transformation") {
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  o.probes = [] {
    std::vector<VectorXd> pts;
    for (int i = 1; i <= 6; ++i)
      pts.push_back(vec2(0.5 * halton(i, 2) + 0.2, 0.5 * halton(i, 3) + 0.2));
    return pts;
  }();
  o.field_box = Box::cube(2, 1.4);
  auto moment = moment_of("x1^2 + y1^2", 1);
  MatrixXd R(2, 2);
  R << 0, -1, 1, 0;  // quarter turn
  std::vector<NumericMap> els{NumericMap::identity(L), NumericMap::linear(L, R),
                              NumericMap::linear(L, (R * R).eval()),
                              NumericMap::linear(L, (R * R * R).eval())};
  AveragingResult res = average(GroupActionSpec::finite(els), moment, o);
  CHECK(res.passed);
  for (const auto& w : o.probes)
    CHECK((res.phi.apply(w) - w).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Z/4 rotation action conjugated through a fiber flow") {
  // elements sigma R^j sigma^{-1} as honest nonlinear pipelines; the
  // machinery must conjugate them back to the rotations
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  o.probes = [] {
    std::vector<VectorXd> pts;
    for (int i = 1; i <= 5; ++i) {
      double r = 0.45 + 0.35 * halton(i, 2);
      double th = 2 * M_PI * halton(i, 3);
      pts.push_back(vec2(r * std::cos(th), r * std::sin(th)));
    }
    return pts;
  }();
  o.field_box = Box::cube(2, 1.3);
  auto moment = moment_of("x1^2 + y1^2", 1);
  auto f = field_of("0.4*(x1^2 + y1^2)^2", 1);
  NumericMap sigma = NumericMap::flow_step(L, f, 1.0, 1e-11);
  MatrixXd R(2, 2);
  R << 0, 1, -1, 0;
  std::vector<NumericMap> els;
  MatrixXd Rj = MatrixXd::Identity(2, 2);
  for (int j = 0; j < 4; ++j) {
    els.push_back(NumericMap::compose(
        sigma,
        NumericMap::compose(NumericMap::linear(L, Rj), sigma.inverse())));
    Rj = (R * Rj).eval();
  }
  AveragingResult res = average(GroupActionSpec::finite(els), moment, o);
  CHECK(res.conjugation_residuals[1] < 1e-7);
  CHECK(res.conjugation_residuals[2] < 1e-7);
  CHECK(res.conjugation_residuals[3] < 1e-7);
}

TEST_CASE("averaging is invariant under relabeling the elements") {
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  auto moment = moment_of("x1*y1", 1);
  MatrixXd I = -MatrixXd::Identity(2, 2);
  auto u = field_of(kOdd, 1);
  NumericMap rho = NumericMap::compose(
      NumericMap::flow_step(L, u, 0.4, 1e-11), NumericMap::linear(L, I));
  GroupActionSpec fwd = GroupActionSpec::finite({NumericMap::identity(L), rho});
  GroupActionSpec rev = GroupActionSpec::finite({rho, NumericMap::identity(L)});
  AveragingResult a = average(fwd, moment, o);
  AveragingResult b = average(rev, moment, o);
  for (const auto& w : o.probes)
    CHECK((a.phi.apply(w) - b.phi.apply(w)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("parametric averaging of the involution family") {
  // rho_p = flow_p(X_u) o I with u odd under I: an involution for every p,
  // rho_0 = I is linear
  VarLayout L = VarLayout::xy_blocks(1);
  AveragingOptions o = quick_options();
  o.path_samples = 17;
  auto moment = moment_of("x1*y1", 1);
  MatrixXd I = -MatrixXd::Identity(2, 2);
  auto u = field_of(kOdd, 1);

  auto family = [&](const VectorXd& p) {
    double t = p(0);
    NumericMap rho_p =
        t == 0.0 ? NumericMap::linear(L, I)
                 : NumericMap::compose(NumericMap::flow_step(L, u, t, 1e-11),
                                       NumericMap::linear(L, I));
    return GroupActionSpec::finite({NumericMap::identity(L), rho_p});
  };

  // involution check at one parameter
  {
    GroupActionSpec at = family(VectorXd::Constant(1, 0.3));
    const auto& rho = at.elements()[1];
    for (const auto& w : o.probes)
      CHECK((rho.apply(rho.apply(w)) - w).cwiseAbs().maxCoeff() < 1e-8);
  }

  std::vector<VectorXd> grid;
  for (double t : {0.0, 0.15, 0.3})
    grid.push_back(VectorXd::Constant(1, t));
  ParametricResult res = average_parametric(family, grid, moment, o);
  CHECK(res.passed);
  for (const auto& per : res.per_parameter)
    CHECK(per.conjugation_residuals[1] < per.budget);
  // continuity: adjacent parameters differ by O(dp)
  CHECK(res.continuity_modulus < 0.2);
  CHECK(res.continuity_modulus > 1e-6);
}
