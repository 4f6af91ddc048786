#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sympnf/models.hpp"
#include "sympnf/rng.hpp"

using namespace sympnf;
using namespace sympnf::models;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LinearModel elliptic_model() {
  return LinearModel(1, 0, quad::make_williamson(1, 0, 0, 0, 1),
                     TwistingGroup::trivial(0, 0), 1.0, 2.0);
}

LinearModel ff_model() {
  return LinearModel(2, 0, quad::make_williamson(0, 0, 1, 0, 2),
                     TwistingGroup::trivial(0, 0), 1.0, 8.0);
}

LinearModel hyperbolic_m1_model(TwistingGroup gamma) {
  return LinearModel(2, 1, quad::make_williamson(0, 1, 0, 1, 2),
                     std::move(gamma), 1.0, 2.0);
}

ModelPoint make_point(const LinearModel& model, std::vector<double> p,
                      std::vector<double> q, std::vector<double> xy) {
  ModelPoint pt;
  pt.p = Eigen::Map<VectorXd>(p.data(), p.size());
  pt.q = Eigen::Map<VectorXd>(q.data(), q.size());
  pt.xy = Eigen::Map<VectorXd>(xy.data(), xy.size());
  return model.canonicalize_chart(pt);
}

ModelAutomorphism random_automorphism(const LinearModel& model,
                                      SplitMix64& rng) {
  ModelAutomorphism a = ModelAutomorphism::identity(model);
  for (int i = 0; i < model.m(); ++i) a.torus_translation(i) = rng.uniform01();
  for (int i = 0; i < model.wtype().k_e; ++i)
    a.elliptic_angles(i) = rng.uniform(0, 2 * M_PI);
  for (int j = 0; j < model.wtype().k_h; ++j) {
    a.hyperbolic_log(j) = rng.symmetric();
    a.hyperbolic_sign[j] = rng.uniform01() < 0.5 ? 1 : -1;
  }
  for (int j = 0; j < model.wtype().k_f; ++j) {
    a.ff_log(j) = rng.symmetric();
    a.ff_angle(j) = rng.uniform(0, 2 * M_PI);
  }
  return a;
}

}  // namespace

TEST_CASE("moment map of the elliptic model") {
  auto model = elliptic_model();
  auto pt = make_point(model, {}, {}, {1.0, 0.0});
  VectorXd h = moment_map(model, pt);
  REQUIRE(h.size() == 1);
  CHECK(h(0) == doctest::Approx(1.0));
}

TEST_CASE("the singular orbit maps to zero") {
  auto model = hyperbolic_m1_model(TwistingGroup::trivial(1, 1));
  auto pt = make_point(model, {0.0}, {0.37}, {0.0, 0.0});
  VectorXd F = moment_map(model, pt);
  CHECK(F.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("focus-focus moment map on interleaved coordinates") {
  auto model = ff_model();
  // xy = (x1, y1, x2, y2) = (1, 2, 3, 4)
  auto pt = make_point(model, {}, {}, {1.0, 2.0, 3.0, 4.0});
  VectorXd h = moment_map(model, pt);
  REQUIRE(h.size() == 2);
  CHECK(h(0) == doctest::Approx(-2.0));  // x1 y2 - x2 y1 = 4 - 6
  CHECK(h(1) == doctest::Approx(14.0));  // x1 y1 + x2 y2 = 2 + 12
}

TEST_CASE("out-of-domain points are rejected") {
  auto model = elliptic_model();
  ModelPoint pt;
  pt.p.resize(0);
  pt.q.resize(0);
  pt.xy.resize(2);
  pt.xy << 5.0, 0.0;
  CHECK_THROWS_AS(moment_map(model, pt), OutOfDomainError);
}

TEST_CASE("identity automorphism fixes points") {
  auto model = ff_model();
  auto pt = make_point(model, {}, {}, {0.3, -0.2, 0.1, 0.4});
  auto img = apply_automorphism(model, ModelAutomorphism::identity(model), pt);
  CHECK((img.xy - pt.xy).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hyperbolic scaling preserves xy exactly") {
  auto model = hyperbolic_m1_model(TwistingGroup::trivial(1, 1));
  auto pt = make_point(model, {0.2}, {0.1}, {1.0, 1.0});
  ModelAutomorphism a = ModelAutomorphism::identity(model);
  a.hyperbolic_log(0) = 0.7;
  auto img = apply_automorphism(model, a, pt);
  CHECK(img.xy(0) == doctest::Approx(std::exp(0.7)).epsilon(1e-14));
  CHECK(img.xy(1) == doctest::Approx(std::exp(-0.7)).epsilon(1e-14));
  CHECK(img.xy(0) * img.xy(1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("elliptic rotation preserves the radius") {
  auto model = elliptic_model();
  auto pt = make_point(model, {}, {}, {0.6, 0.8});
  ModelAutomorphism a = ModelAutomorphism::identity(model);
  a.elliptic_angles(0) = 1.1;
  auto img = apply_automorphism(model, a, pt);
  CHECK(img.xy.squaredNorm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("automorphisms preserve the moment map and omega") {
  SplitMix64 rng(5);
  LinearModel model(4, 1, quad::make_williamson(1, 0, 1, 1, 4),
                    TwistingGroup::trivial(0, 1), 1.0, 4.0);
  MatrixXd J = model.layout().J();
  auto moment = model.moment();
  for (int t = 0; t < 20; ++t) {
    ModelAutomorphism a = random_automorphism(model, rng);
    flows::NumericMap map = automorphism_to_map(model, a);
    MatrixXd D = map.jacobian(VectorXd::Zero(8));
    CHECK((D.transpose() * J * D - J).cwiseAbs().maxCoeff() < 1e-10);
    VectorXd z(8);
    for (int i = 0; i < 8; ++i) z(i) = 0.3 * rng.symmetric();
    VectorXd w = map.apply(z);
    CHECK((moment.eval(w) - moment.eval(z)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("automorphism composition is commutative") {
  SplitMix64 rng(6);
  LinearModel model(3, 1, quad::make_williamson(1, 1, 0, 1, 3),
                    TwistingGroup::trivial(1, 1), 1.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    ModelAutomorphism a = random_automorphism(model, rng);
    ModelAutomorphism b = random_automorphism(model, rng);
    auto pt = make_point(model, {0.3}, {0.6},
                         {0.2 * rng.symmetric(), 0.2 * rng.symmetric(),
                          0.2 * rng.symmetric(), 0.2 * rng.symmetric()});
    auto ab = apply_automorphism(model, a, apply_automorphism(model, b, pt));
    auto ba = apply_automorphism(model, b, apply_automorphism(model, a, pt));
    CHECK((ab.p - ba.p).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ab.q - ba.q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ab.xy - ba.xy).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moment components Poisson-commute numerically") {
  LinearModel model(4, 1, quad::make_williamson(1, 0, 1, 1, 4),
                    TwistingGroup::trivial(0, 1), 1.0, 4.0);
  auto moment = model.moment();
  MatrixXd J = model.layout().J();
  SplitMix64 rng(7);
  for (int t = 0; t < 20; ++t) {
    VectorXd z(8);
    for (int i = 0; i < 8; ++i) z(i) = 0.5 * rng.symmetric();
    for (int a = 0; a < moment.size(); ++a)
      for (int b = a + 1; b < moment.size(); ++b) {
        double br = moment.gradient(a, z).dot(J * moment.gradient(b, z));
        CHECK(std::abs(br) < 1e-10);
      }
  }
}

TEST_CASE("twisting groups") {
  SUBCASE("trivial quotient returns the point") {
    auto model = hyperbolic_m1_model(TwistingGroup::trivial(1, 1));
    auto pt = make_point(model, {0.3}, {0.8}, {0.5, -0.2});
    auto canon = quotient_canonicalize(model, pt);
    CHECK((canon.xy - pt.xy).cwiseAbs().maxCoeff() == 0.0);
    CHECK(canon.q(0) == pt.q(0));
  }
  SUBCASE("flip generator without translation is not free") {
    TwistGenerator gen;
    gen.flips = {1};
    gen.translation = {Rational{0, 1}};
    CHECK_THROWS_AS(
        hyperbolic_m1_model(TwistingGroup::generated({gen}, 1, 1)), SpecError);
  }
  SUBCASE("Z/2 flip with half translation") {
    TwistGenerator gen;
    gen.flips = {1};
    gen.translation = {Rational::mod1(1, 2)};
    auto gamma = TwistingGroup::generated({gen}, 1, 1);
    CHECK(gamma.size() == 2);
    auto model = hyperbolic_m1_model(gamma);

    auto pt = make_point(model, {0.3}, {0.8}, {0.5, -0.2});
    const auto& g = model.gamma().elements()[1].is_identity()
                        ? model.gamma().elements()[0]
                        : model.gamma().elements()[1];
    auto image = apply_group_element(model, g, pt);
    // the orbit has two members that canonicalize identically
    auto c1 = quotient_canonicalize(model, pt);
    auto c2 = quotient_canonicalize(model, image);
    CHECK((c1.xy - c2.xy).cwiseAbs().maxCoeff() == 0.0);
    CHECK(c1.q(0) == c2.q(0));
    // idempotent
    auto c3 = quotient_canonicalize(model, c1);
    CHECK(c3.q(0) == c1.q(0));
    CHECK((c3.xy - c1.xy).cwiseAbs().maxCoeff() == 0.0);
    // moment map is Gamma-invariant exactly
    CHECK((moment_map(model, pt) - moment_map(model, image))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  SUBCASE("fixed locus points still canonicalize into q in [0, 1/2)") {
    TwistGenerator gen;
    gen.flips = {1};
    gen.translation = {Rational::mod1(1, 2)};
    auto model = hyperbolic_m1_model(TwistingGroup::generated({gen}, 1, 1));
    auto pt = make_point(model, {0.1}, {0.77}, {0.0, 0.0});
    auto canon = quotient_canonicalize(model, pt);
    CHECK(canon.q(0) >= 0.0);
    CHECK(canon.q(0) < 0.5);
  }
}

TEST_CASE("torus action flow") {
  auto model = hyperbolic_m1_model(TwistingGroup::trivial(1, 1));
  auto pt = make_point(model, {0.3}, {0.25}, {0.4, 0.1});
  VectorXd dir(1);
  dir << 1.0;
  SUBCASE("period one") {
    auto img = torus_action_flow(model, dir, 1.0, pt);
    CHECK(img.q(0) == doctest::Approx(pt.q(0)).epsilon(1e-15));
  }
  SUBCASE("half turn") {
    auto img = torus_action_flow(model, dir, 0.5, pt);
    CHECK(img.q(0) == doctest::Approx(0.75));
  }
  SUBCASE("moment map invariant along the flow") {
    auto img = torus_action_flow(model, dir, 0.37, pt);
    CHECK((moment_map(model, img) - moment_map(model, pt))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("linear action structure verification") {
  auto model = hyperbolic_m1_model(TwistingGroup::trivial(1, 1));
  SplitMix64 rng(8);

  ModelAutomorphism a = ModelAutomorphism::identity(model);
  a.torus_translation(0) = 0.3;
  a.hyperbolic_log(0) = 0.4;
  ModelAutomorphism b = ModelAutomorphism::identity(model);
  b.torus_translation(0) = 0.65;
  b.hyperbolic_sign[0] = -1;

  // negative control: q-shift by p1 (symplectic, system-preserving)
  MatrixXd A = MatrixXd::Identity(4, 4);
  A(1, 0) = 1.0;  // q1 += p1
  flows::NumericMap shear = flows::NumericMap::linear(model.layout(), A);

  std::vector<flows::NumericMap> maps{
      automorphism_to_map(model, a), automorphism_to_map(model, b),
      flows::NumericMap::compose(automorphism_to_map(model, a),
                                 automorphism_to_map(model, b)),
      shear};
  StructureOptions opts;
  opts.grid_per_axis = 7;
  auto reports = verify_linear_action_structure(model, maps, opts);
  REQUIRE(reports.size() == 4);
  CHECK(reports[0].passed);
  CHECK(reports[0].translation_p_variation < 1e-10);
  CHECK(reports[0].fiber_linear_deviation < 1e-10);
  CHECK(reports[1].passed);
  CHECK(reports[2].passed);  // composition of passing maps passes
  CHECK(reports[3].system_preserving);
  CHECK_FALSE(reports[3].passed);
  // the artificial shift varies by about the diameter of the p-range
  CHECK(reports[3].translation_p_variation > 0.5);
}
