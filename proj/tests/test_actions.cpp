#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sympnf/actions.hpp"

using namespace sympnf;
using namespace sympnf::actions;

TEST_CASE("all primitive tags are primitives of the same area form") {
  CHECK(primitive_curl(PrimitiveTag::YdX) == primitive_curl(PrimitiveTag::MinusXdY));
  CHECK(primitive_curl(PrimitiveTag::YdX) == primitive_curl(PrimitiveTag::Mixed));
}

TEST_CASE("tracing the elliptic circle") {
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
  CycleTrace t = trace_cycle(sys, 1.0);
  CHECK(t.closure_gap < 1e-9);
  CHECK(t.period == doctest::Approx(M_PI).epsilon(1e-8));
  for (const auto& p : t.points)
    CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("hyperbolas do not close") {
  PlanarSystem sys = PlanarSystem::make("x1*y1", 3.0);
  TraceOptions opts;
  opts.seed_direction = Eigen::Vector2d(1.0, 1.0);
  CHECK_THROWS_AS(trace_cycle(sys, 1.0, opts), OpenCycleError);
}

TEST_CASE("critical energies are rejected") {
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
  CHECK_THROWS_AS(trace_cycle(sys, 0.0), RegularityError);
}

TEST_CASE("elliptic action is pi E, against the shoelace oracle") {
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
  for (double E : {0.3, 1.0}) {
    CycleTrace t = trace_cycle(sys, E);
    double p = t.action(sys.tag);
    CHECK(p == doctest::Approx(M_PI * E).epsilon(1e-8));
    // independent polyline area (coarse; the polyline is the step sequence)
    double area = std::abs(oracles::shoelace(t.points));
    CHECK(area == doctest::Approx(M_PI * E).epsilon(2e-2));
  }
}

TEST_CASE("action vanishes as the cycle degenerates") {
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
  CHECK(std::abs(action_integral(sys, 1e-3)) < 5e-3);
}

TEST_CASE("primitive-tag independence (Stokes)") {
  PlanarSystem sys = PlanarSystem::make("(x1^2 + y1^2)/2 + x1^4/4", 3.0);
  CycleTrace t = trace_cycle(sys, 0.8);
  CHECK(t.tag_spread() < 1e-9);
}

TEST_CASE("profiles are monotone for convex Hamiltonians") {
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
  std::vector<double> Es;
  for (int i = 0; i < 8; ++i) Es.push_back(0.2 + 0.1 * i);
  ActionProfile prof = action_profile(sys, Es);
  CHECK(prof.monotone);
}

TEST_CASE("period-one verification") {
  TraceOptions opts;
  opts.tol = 1e-12;
  SUBCASE("H = x^2 + y^2: p(E) = pi E, period pi") {
    PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2", 3.0);
    std::vector<double> Es;
    for (int i = 0; i < 8; ++i) Es.push_back(0.3 + 0.1 * i);
    ActionProfile prof = action_profile(sys, Es, opts);
    for (std::size_t i = 0; i < Es.size(); ++i) {
      CHECK(prof.actions[i] == doctest::Approx(M_PI * Es[i]).epsilon(1e-8));
      CHECK(prof.periods[i] == doctest::Approx(M_PI).epsilon(1e-8));
    }
    PeriodOneReport rep = verify_period_one(sys, prof, 1e-4, opts);
    CHECK(rep.conclusive);
    CHECK(rep.passed);
    CHECK(rep.max_return_residual < 1e-6);
  }
  SUBCASE("H = (x^2 + y^2)/2: p(E) = 2 pi E") {
    PlanarSystem sys = PlanarSystem::make("(x1^2 + y1^2)/2", 3.0);
    std::vector<double> Es{0.3, 0.4, 0.5, 0.6};
    ActionProfile prof = action_profile(sys, Es, opts);
    for (std::size_t i = 0; i < Es.size(); ++i)
      CHECK(prof.actions[i] == doctest::Approx(2 * M_PI * Es[i]).epsilon(1e-8));
    PeriodOneReport rep = verify_period_one(sys, prof, 1e-4, opts);
    CHECK(rep.passed);
  }
  SUBCASE("nonlinear oscillator returns in unit time") {
    PlanarSystem sys = PlanarSystem::make("(x1^2 + y1^2)/2 + x1^4/4", 3.0);
    std::vector<double> Es;
    for (int i = 0; i < 9; ++i) Es.push_back(0.4 + 0.05 * i);
    ActionProfile prof = action_profile(sys, Es, opts);
    PeriodOneReport rep = verify_period_one(sys, prof, 1e-4, opts);
    CHECK(rep.conclusive);
    CHECK(rep.max_return_residual < 1e-4);
    // Mineur duality: dp/dE equals the measured orbital period
    CHECK(rep.max_duality_residual < 1e-4);
  }
}

TEST_CASE("actions are invariant under the sign flip applied to the system") {
  // flipped system H(-x, -y) traced from the flipped seed gives bitwise
  // mirrored trajectories, hence identical actions
  PlanarSystem sys = PlanarSystem::make("x1^2 + y1^2 + x1^3/5", 2.0);
  PlanarSystem flipped = sys;
  {
    std::map<std::string, expr::ExprPtr> binds{
        {"x1", expr::neg(expr::var("x1"))},
        {"y1", expr::neg(expr::var("y1"))}};
    flipped.H = expr::substitute(sys.H, binds);
  }
  TraceOptions fopts;
  fopts.seed_direction = Eigen::Vector2d(-1.0, 0.0);
  for (double E : {0.3, 0.5}) {
    double a = action_integral(sys, E);
    double b = action_integral(flipped, E, fopts);
    CHECK(std::abs(a - b) < 1e-12);
  }
}

TEST_CASE("product systems act componentwise") {
  PlanarSystem a = PlanarSystem::make("x1^2 + y1^2", 3.0);
  PlanarSystem b = PlanarSystem::make("2*(x1^2 + y1^2)", 3.0);
  SUBCASE("two elliptic blocks") {
    auto acts = product_actions({a, b}, {0.5, 0.8});
    CHECK(acts[0] == doctest::Approx(M_PI * 0.5).epsilon(1e-8));
    CHECK(acts[1] == doctest::Approx(M_PI * 0.8 / 2.0).epsilon(1e-8));
  }
  SUBCASE("permuting blocks permutes outputs") {
    auto fwd = product_actions({a, b}, {0.5, 0.8});
    auto rev = product_actions({b, a}, {0.8, 0.5});
    CHECK(fwd[0] == rev[1]);
    CHECK(fwd[1] == rev[0]);
  }
  SUBCASE("vanishing block energy") {
    auto acts = product_actions({a, b}, {1e-3, 0.5});
    CHECK(std::abs(acts[0]) < 5e-3);
  }
  SUBCASE("arity") {
    CHECK_THROWS_AS(product_actions({a, b}, {0.5}), ArityError);
  }
}
