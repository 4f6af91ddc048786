#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sympnf/counterexample.hpp"
#include "sympnf/rng.hpp"

using namespace sympnf;
using namespace sympnf::cex;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd gamma_sqrt2() {
  VectorXd g(2);
  g << 1.0, std::sqrt(2.0);
  return g;
}

}  // namespace

TEST_CASE("nonresonance search") {
  SUBCASE("(1, sqrt 2) is nonresonant to N = 50") {
    auto rep = check_nonresonance(gamma_sqrt2(), 50, 1e-9);
    CHECK(rep.nonresonant);
    CHECK(rep.worst_value > 1e-9);
  }
  SUBCASE("(1, 2) resonates with witness (2, -1)") {
    VectorXd g(2);
    g << 1.0, 2.0;
    auto rep = check_nonresonance(g, 5, 1e-9);
    CHECK_FALSE(rep.nonresonant);
    CHECK(rep.worst_value == 0.0);
    CHECK(std::abs(rep.worst_k(0)) == 2);
    CHECK(std::abs(rep.worst_k(1)) == 1);
  }
  SUBCASE("(1, 1.4142) is caught by the rational approximation at N = 10^4") {
    VectorXd g(2);
    g << 1.0, 1.4142;
    auto rep = check_nonresonance(g, 10000, 1e-9);
    CHECK_FALSE(rep.nonresonant);
    // 1.4142 = 7071/5000, so (7071, -5000) is an exact integer relation
    CHECK(std::abs(rep.worst_k(0)) == 7071);
    CHECK(std::abs(rep.worst_k(1)) == 5000);
  }
}

TEST_CASE("desk spec satisfies the plateau invariants") {
  PlateauSpec spec = desk_spec(gamma_sqrt2(), 2);
  REQUIRE(spec.regions.size() == 2);
  // continued-fraction convergents of sqrt 2: 7/5 then 17/12
  CHECK(spec.regions[0].slope[1].first == 7);
  CHECK(spec.regions[0].slope[1].second == 5);
  CHECK(spec.regions[1].slope[1].first == 17);
  CHECK(spec.regions[1].slope[1].second == 12);
  CHECK(spec.regions[0].slope[0].first == 1);
  CHECK(spec.regions[1].radius < spec.regions[0].radius);
}

TEST_CASE("overlapping balls are rejected") {
  PlateauSpec spec = desk_spec(gamma_sqrt2(), 2);
  spec.regions[1].center = spec.regions[0].center + VectorXd::Constant(2, 1e-4);
  spec.regions[1].radius = spec.regions[0].radius;
  CHECK_THROWS_AS(spec.validate(gamma_sqrt2()), SpecError);
}

TEST_CASE("plateau function Q") {
  VectorXd gamma = gamma_sqrt2();
  VarLayout ichart;
  ichart.names = {"I1", "I2"};
  SUBCASE("K = 0 gives the linear background") {
    PlateauSpec empty;
    auto Q = build_plateau_Q(empty, gamma);
    expr::Compiled q(Q, ichart);
    VectorXd I(2);
    I << 0.3, 0.2;
    CHECK(q.value(I) ==
          doctest::Approx(gamma(0) * 0.3 + gamma(1) * 0.2).epsilon(1e-14));
    CHECK(q.value(VectorXd::Zero(2)) == 0.0);
  }
  SUBCASE("on the inner plateau Q is exactly linear with the rational slope") {
    PlateauSpec spec = desk_spec(gamma, 2);
    auto Q = build_plateau_Q(spec, gamma);
    expr::Compiled q(Q, ichart);
    const auto& r = spec.regions[0];
    // value at the center matches the background exactly (choice of d_k)
    double background = gamma(0) * r.center(0) + gamma(1) * r.center(1);
    CHECK(q.value(r.center) == doctest::Approx(background).epsilon(1e-14));
    // gradient on inner-plateau points is gamma^k, exactly
    double g1 = 7.0 / 5.0;
    for (double dx : {-0.3, 0.0, 0.4}) {
      VectorXd I = r.center;
      I(0) += dx * r.radius / 2.0 * 0.6;
      I(1) -= dx * r.radius / 2.0 * 0.5;
      Dual d = q.dual(I);
      CHECK(d.g(0) == 1.0);
      CHECK(d.g(1) == g1);
    }
    // gradient at 0 is gamma
    Dual d0 = q.dual(VectorXd::Zero(2));
    CHECK(d0.g(0) == doctest::Approx(gamma(0)).epsilon(1e-14));
    CHECK(d0.g(1) == doctest::Approx(gamma(1)).epsilon(1e-14));
    CHECK(q.value(VectorXd::Zero(2)) == 0.0);
  }
}

TEST_CASE("H2 construction") {
  VectorXd gamma = gamma_sqrt2();
  PlateauSpec spec = desk_spec(gamma, 2);
  PerturbedSystem sys = build_H2(spec, gamma, {1e-3, 1e-3});

  SUBCASE("resonance integers") {
    CHECK(sys.regions[0].a == 7);
    CHECK(sys.regions[0].b == 5);
    CHECK(sys.regions[1].a == 17);
    CHECK(sys.regions[1].b == 12);
  }
  SUBCASE("quadratic part at 0 is sum gamma_i (x_i^2 + y_i^2)") {
    MatrixXd A = quadratic_part_at_zero(sys.H2, sys.layout());
    MatrixXd want = MatrixXd::Zero(4, 4);
    want(0, 0) = gamma(0);
    want(1, 1) = gamma(1);
    want(2, 2) = gamma(0);
    want(3, 3) = gamma(1);
    CHECK((A - want).cwiseAbs().maxCoeff() < 1e-10);
    // identical to the quadratic part of H1 (perturbation supported away)
    MatrixXd A1 = quadratic_part_at_zero(sys.H1, sys.layout());
    CHECK((A - A1).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("H2 equals H1 outside the regions, exactly") {
    CHECK(outside_support_residual(sys, 200) == 0.0);
    CHECK(support_is_inside_regions(sys));
  }
  SUBCASE("zero epsilon keeps the perturbation term identically zero") {
    PerturbedSystem base = build_H2(spec, gamma, {0.0, 0.0});
    expr::Compiled h1(base.H1, base.layout());
    expr::Compiled h2(base.H2, base.layout());
    for (auto& z : region_probes(base, 1, 16, 0.8))
      CHECK(h2.value(z) == h1.value(z));
  }
  SUBCASE("resonant cosine term commutes with H1 on the core") {
    auto probes = region_probes(sys, 1, 32, 0.45);
    double r = bracket_residual_at(sys.H1, sys.regions[0].cos_term,
                                   sys.layout(), probes);
    CHECK(r < 1e-9);
  }
  SUBCASE("integrability witness") {
    CHECK(verify_integrability_witness(sys, 1) < 1e-8);
    CHECK(verify_integrability_witness(sys, 2) < 1e-8);
    // outside the regions any I_i commutes with H2
    auto I1 = expr::parse("x1^2 + y1^2");
    std::vector<VectorXd> outside;
    for (int i = 0; i < 16; ++i) {
      VectorXd z(4);
      double I = 0.55 + 0.1 * halton(i + 1, 2);
      double th = 2 * M_PI * halton(i + 1, 3);
      z << std::sqrt(I) * std::cos(th), 0.2, std::sqrt(I) * std::sin(th), 0.1;
      outside.push_back(z);
    }
    CHECK(bracket_residual_at(sys.H2, I1, sys.layout(), outside) < 1e-8);
  }
  SUBCASE("flat gluing of the step functions") {
    // spot-check the piecewise-flat nodes of H2 near their guards
    std::vector<VectorXd> samples;
    for (int i = 0; i < 4; ++i) {
      VectorXd z(4);
      z << 0.5 + 0.01 * i, 0.5, 0.0, 0.0;
      samples.push_back(z);
    }
    CHECK(expr::flat_glue_mismatch(sys.H2, sys.layout(), samples) < 1e-10);
  }
}

TEST_CASE("hyperbolic orbit detection") {
  VectorXd gamma = gamma_sqrt2();
  PlateauSpec spec = desk_spec(gamma, 2);

  SUBCASE("unperturbed region has unit multipliers") {
    PerturbedSystem sys = build_H2(spec, gamma, {0.0, 0.0});
    DetectOptions opts;
    opts.integrator_tol = 1e-10;
    FloquetReport rep = detect_hyperbolic_orbit(sys, 1, opts);
    CHECK(rep.found);
    CHECK_FALSE(rep.hyperbolic);
    for (const auto& lam : rep.multipliers)
      CHECK(std::abs(std::abs(lam) - 1.0) < 1e-6);
  }
  SUBCASE("perturbed region carries a hyperbolic orbit matching the oracle") {
    PerturbedSystem sys = build_H2(spec, gamma, {1e-3, 0.0});
    DetectOptions opts;
    opts.integrator_tol = 1e-10;
    FloquetReport rep = detect_hyperbolic_orbit(sys, 1, opts);
    REQUIRE(rep.found);
    CHECK(rep.hyperbolic);
    CHECK(rep.lambda_max > 1.01);
    CHECK(std::abs(rep.multiplier_product - 1.0) < 1e-6);

    PendulumOracle oracle = pendulum_oracle(sys, 1);
    CHECK(oracle.lambda > 1.01);
    // saddle exponent from the reduced pendulum predicts the multiplier
    CHECK(std::log(rep.lambda_max) ==
          doctest::Approx(std::log(oracle.lambda)).epsilon(0.2));
  }
}
