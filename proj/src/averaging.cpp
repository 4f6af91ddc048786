#include "sympnf/averaging.hpp"

#include <algorithm>
#include <cmath>

#include "sympnf/errors.hpp"

namespace sympnf::avg {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using flows::FieldPtr;
using flows::NumericMap;

double residual_budget(const AveragingOptions& opts, double spatial_h) {
  double dt = 1.0 / (opts.path_samples - 1);
  double delta = opts.derivative_step;
  double t4 = std::pow(dt, 4) / 180.0 * opts.deriv_bound_t;
  double x4 = std::pow(spatial_h, 4) / 24.0 * opts.deriv_bound_x;
  // 4th-order path-derivative stencil: truncation + integrator noise / delta
  double fd = std::pow(delta, 4) / 30.0 * opts.deriv_bound_t +
              4.0 * opts.tol / delta;
  return t4 + x4 + fd + 100.0 * opts.tol;
}

double residual_budget(const AveragingOptions& opts) {
  double h = 0.0;
  if (opts.field_box.lo.size() > 0) {
    std::vector<int> grid = opts.field_grid;
    if (grid.empty())
      grid.assign(static_cast<std::size_t>(opts.field_box.lo.size()), 49);
    for (Eigen::Index a = 0; a < opts.field_box.lo.size(); ++a)
      h = std::max(h, (opts.field_box.hi(a) - opts.field_box.lo(a)) /
                          (grid[static_cast<std::size_t>(a)] - 1));
  }
  return residual_budget(opts, h);
}

MatrixXd linear_part(const NumericMap& map, double tol) {
  VectorXd zero = VectorXd::Zero(map.layout().dim());
  if (map.apply(zero).cwiseAbs().maxCoeff() > tol)
    throw PreconditionError("linear_part: map does not fix the origin");
  return map.jacobian(zero);
}

NumericMap homothety_path(const NumericMap& map, double t, double origin_tol) {
  const VarLayout& L = map.layout();
  if (t < 0.0 || t > 2.0)
    throw PreconditionError("homothety_path: t must lie in [0, 2]");
  if (t == 0.0) return NumericMap::linear(L, linear_part(map, origin_tol));
  const int d = L.dim();
  NumericMap shrink = NumericMap::linear(L, t * MatrixXd::Identity(d, d));
  NumericMap grow = NumericMap::linear(L, (1.0 / t) * MatrixXd::Identity(d, d));
  return NumericMap::compose(grow, NumericMap::compose(map, shrink));
}

bool moment_is_homogeneous(const flows::MomentMap& moment,
                           const std::vector<VectorXd>& samples,
                           std::vector<int>* degrees) {
  if (degrees) degrees->assign(moment.size(), 0);
  for (int j = 0; j < moment.size(); ++j) {
    int degree = 0;
    bool have = false;
    for (const auto& z : samples) {
      double f = moment.eval(z)(j);
      if (std::abs(f) < 1e-9) continue;
      double f_half = moment.eval((0.5 * z).eval())(j);
      if (std::abs(f_half) < 1e-300) return false;
      double d_est = std::log(f_half / f) / std::log(0.5);
      int d_round = static_cast<int>(std::lround(d_est));
      if (std::abs(d_est - d_round) > 1e-6) return false;
      double f_third = moment.eval((0.3 * z).eval())(j);
      if (std::abs(f_third - f * std::pow(0.3, d_round)) >
          1e-8 * std::max(1.0, std::abs(f)))
        return false;
      if (have && d_round != degree) return false;
      degree = d_round;
      have = true;
    }
    if (!have) return false;
    if (degrees) (*degrees)[j] = degree;
  }
  return true;
}

namespace {

// max |map(z) - A z| over probes: detects (numerically) linear maps
double linearity_defect(const NumericMap& map, const MatrixXd& A,
                        const std::vector<VectorXd>& probes) {
  double worst = 0.0;
  for (const auto& z : probes)
    worst = std::max(worst, (map.apply(z) - A * z).cwiseAbs().maxCoeff());
  return worst;
}

// the homothety parameter is warped to cluster samples near t = 1, where
// flat Hamiltonians concentrate the path's motion; the generator integral is
// invariant under reparametrization, so this only improves the quadrature
double warp_parameter(double t) {
  return t - std::sin(2.0 * M_PI * t) / (2.0 * M_PI);
}

flows::PathOfMaps build_generator_path(const NumericMap& map,
                                       const MatrixXd& L,
                                       const AveragingOptions& opts) {
  const VarLayout& layout = map.layout();
  NumericMap inv = map.inverse();
  NumericMap lin = NumericMap::linear(layout, L);
  auto R_of = [layout, inv, lin](double t) -> NumericMap {
    double s = warp_parameter(t);
    if (s == 0.0) return NumericMap::identity(layout);
    return NumericMap::compose(lin, homothety_path(inv, s));
  };

  flows::PathOfMaps path;
  const int K = opts.path_samples;
  for (int i = 0; i < K; ++i) {
    double t = static_cast<double>(i) / (K - 1);
    path.ts.push_back(t);
    path.maps.push_back(R_of(t));
  }
  const double delta = opts.derivative_step;
  path.derivative = [R_of, delta](double t, const VectorXd& z) -> VectorXd {
    if (t >= 2.0 * delta) {
      // 4th-order central stencil keeps the truncation error negligible at
      // a step large enough not to amplify integrator noise
      return (-R_of(t + 2.0 * delta).apply(z) +
              8.0 * R_of(t + delta).apply(z) -
              8.0 * R_of(t - delta).apply(z) +
              R_of(t - 2.0 * delta).apply(z)) /
             (12.0 * delta);
    }
    // 3rd-order one-sided stencil near t = 0
    return (-11.0 * R_of(t).apply(z) + 18.0 * R_of(t + delta).apply(z) -
            9.0 * R_of(t + 2.0 * delta).apply(z) +
            2.0 * R_of(t + 3.0 * delta).apply(z)) /
           (6.0 * delta);
  };
  return path;
}

flows::PathToFieldOptions to_path_options(const AveragingOptions& opts) {
  flows::PathToFieldOptions po;
  po.tol = opts.tol;
  po.grid = opts.field_grid;
  po.membership_tol = opts.precheck_tol;
  return po;
}

// representation choice and the corresponding budget inputs
struct SamplingPlan {
  bool fiber = false;
  double c_lo = 0.0, c_hi = 0.0;
  double spatial_h = 0.0;
};

SamplingPlan make_plan(const VarLayout& layout, const flows::MomentMap& moment,
                       const AveragingOptions& opts) {
  SamplingPlan plan;
  if (opts.prefer_fiber && layout.dim() == 2 && moment.size() == 1) {
    double lo = 1e300, hi = -1e300;
    for (const auto& w : opts.probes) {
      double c = moment.eval(w)(0);
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    double span = std::max(hi - lo, 1e-3 + 0.02 * std::abs(hi));
    plan.fiber = true;
    plan.c_lo = lo - opts.band_margin * span;
    plan.c_hi = hi + opts.band_margin * span;
    plan.spatial_h = (plan.c_hi - plan.c_lo) / (opts.fiber_nodes - 1);
    return plan;
  }
  if (opts.field_box.lo.size() == 0)
    throw PreconditionError(
        "averaging: lattice sampling requires a field box");
  std::vector<int> grid = opts.field_grid;
  if (grid.empty())
    grid.assign(static_cast<std::size_t>(opts.field_box.lo.size()), 49);
  for (Eigen::Index a = 0; a < opts.field_box.lo.size(); ++a)
    plan.spatial_h =
        std::max(plan.spatial_h, (opts.field_box.hi(a) - opts.field_box.lo(a)) /
                                     (grid[static_cast<std::size_t>(a)] - 1));
  return plan;
}

flows::FieldPtr build_field_from_path(const flows::PathOfMaps& path,
                                      const flows::MomentMap& moment,
                                      const SamplingPlan& plan,
                                      const AveragingOptions& opts) {
  if (plan.fiber) {
    flows::FiberFieldOptions fo;
    fo.tol = opts.tol;
    fo.c_lo = plan.c_lo;
    fo.c_hi = plan.c_hi;
    fo.nodes = opts.fiber_nodes;
    fo.membership_tol = opts.precheck_tol;
    return flows::path_to_fiber_field(path, moment, fo);
  }
  return flows::path_to_field(path, moment, opts.field_box,
                              to_path_options(opts));
}

flows::FieldPtr zero_field(const VarLayout& layout,
                           const flows::MomentMap& moment,
                           const SamplingPlan& plan,
                           const AveragingOptions& opts) {
  if (plan.fiber) {
    std::vector<flows::FiberSampledField::Branch> branches;
    for (auto [sx, sy] : std::vector<std::pair<int, int>>{
             {1, 1}, {-1, -1}, {1, -1}, {-1, 1}}) {
      flows::FiberSampledField::Branch b;
      b.sign_x = sx;
      b.sign_y = sy;
      b.betas.assign(static_cast<std::size_t>(opts.fiber_nodes), 0.0);
      branches.push_back(std::move(b));
    }
    return std::make_shared<flows::FiberSampledField>(
        moment.sources()[0], layout, flows::FiberBranchMode::Quadrant,
        plan.c_lo, plan.c_hi, std::move(branches));
  }
  std::vector<int> grid(static_cast<std::size_t>(layout.dim()), 4);
  auto nodes = flows::SampledField::lattice(opts.field_box, grid);
  std::vector<Eigen::VectorXd> vals(nodes.size(),
                                    Eigen::VectorXd::Zero(layout.dim()));
  return std::make_shared<flows::SampledField>(opts.field_box, grid,
                                               std::move(vals));
}

}  // namespace

GeneratorResult generator_for(const NumericMap& map,
                              const flows::MomentMap& moment,
                              const AveragingOptions& opts) {
  if (opts.probes.empty())
    throw PreconditionError("generator_for: probe set required");

  // membership: preserves omega and the moment map, fixes the origin
  double om = map.omega_residual(opts.probes);
  double mm = map.moment_residual(moment, opts.probes);
  if (om > opts.precheck_tol || mm > opts.precheck_tol)
    throw NotSystemPreservingError(
        "generator_for: map fails the system-preservation check (omega " +
        std::to_string(om) + ", moment " + std::to_string(mm) + ")");
  if (!moment_is_homogeneous(moment, opts.probes))
    throw PreconditionError(
        "generator_for: homothety paths need a homogeneous moment map");

  SamplingPlan plan = make_plan(map.layout(), moment, opts);
  MatrixXd L = linear_part(map, 1e-8);
  GeneratorResult res;
  res.budget = residual_budget(opts, plan.spatial_h);

  // linear maps have the zero generator
  if (linearity_defect(map, L, opts.probes) < 10.0 * opts.tol) {
    res.field = zero_field(map.layout(), moment, plan, opts);
    res.endpoint_defect = linearity_defect(map, L, opts.probes);
    return res;
  }

  flows::PathOfMaps path = build_generator_path(map, L, opts);
  res.field = build_field_from_path(path, moment, plan, opts);

  // time-1 map of the field must reproduce lin(map) o map^-1
  NumericMap target = NumericMap::compose(
      NumericMap::linear(map.layout(), L), map.inverse());
  flows::FlowOptions fo;
  fo.tol = opts.tol;
  for (const auto& w : opts.probes) {
    VectorXd a = flows::flow(*res.field, 1.0, w, fo);
    VectorXd b = target.apply(w);
    res.endpoint_defect =
        std::max(res.endpoint_defect, (a - b).cwiseAbs().maxCoeff());
  }
  return res;
}

// ------------------------------------------------------------ group actions

GroupActionSpec GroupActionSpec::finite(std::vector<NumericMap> elements) {
  if (elements.empty())
    throw ArityError("GroupActionSpec: need at least the identity element");
  GroupActionSpec s;
  s.finite_ = true;
  s.weights_.assign(elements.size(), 1.0 / elements.size());
  s.elements_ = std::move(elements);
  return s;
}

GroupActionSpec GroupActionSpec::circle(
    std::function<NumericMap(double)> generator, int order) {
  if (order < 2) throw ArityError("GroupActionSpec: circle order must be >= 2");
  GroupActionSpec s;
  s.finite_ = false;
  for (int j = 0; j < order; ++j)
    s.elements_.push_back(generator(static_cast<double>(j) / order));
  s.weights_.assign(order, 1.0 / order);
  return s;
}

namespace {

void verify_composition_table(const GroupActionSpec& action,
                              const std::vector<VectorXd>& probes,
                              double tol) {
  const auto& els = action.elements();
  const std::size_t n = els.size();
  if (n > 12) return;  // table check is for small finite groups
  std::vector<std::vector<VectorXd>> images(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& z : probes) images[i].push_back(els[i].apply(z));

  auto matches = [&](const std::vector<VectorXd>& vals, std::size_t k) {
    for (std::size_t p = 0; p < probes.size(); ++p)
      if ((vals[p] - images[k][p]).cwiseAbs().maxCoeff() > tol) return false;
    return true;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<VectorXd> comp;
      for (const auto& z : probes) comp.push_back(els[i].apply(els[j].apply(z)));
      bool found = false;
      for (std::size_t k = 0; k < n && !found; ++k) found = matches(comp, k);
      if (!found)
        throw NotSystemPreservingError(
            "group action: composition " + std::to_string(i) + " o " +
            std::to_string(j) + " is not in the element list");
    }
    // inverse: some j with e_i o e_j = id
    bool has_inverse = false;
    for (std::size_t j = 0; j < n && !has_inverse; ++j) {
      bool ok = true;
      for (const auto& z : probes) {
        if ((els[i].apply(els[j].apply(z)) - z).cwiseAbs().maxCoeff() > tol) {
          ok = false;
          break;
        }
      }
      has_inverse = ok;
    }
    if (!has_inverse)
      throw NotSystemPreservingError("group action: element " +
                                     std::to_string(i) + " has no inverse");
  }
}

}  // namespace

AveragingResult average(const GroupActionSpec& action,
                        const flows::MomentMap& moment,
                        const AveragingOptions& opts) {
  if (opts.probes.empty())
    throw PreconditionError("average: probe set required");
  const auto& els = action.elements();
  const VarLayout layout = els[0].layout();
  const int dim = layout.dim();

  // element prechecks, naming the offender
  for (std::size_t i = 0; i < els.size(); ++i) {
    VectorXd zero = VectorXd::Zero(dim);
    if (els[i].apply(zero).cwiseAbs().maxCoeff() > 1e-8)
      throw PreconditionError("average: element " + std::to_string(i) +
                              " does not fix the origin");
    double om = els[i].omega_residual(opts.probes);
    double mm = els[i].moment_residual(moment, opts.probes);
    if (om > opts.precheck_tol || mm > opts.precheck_tol)
      throw NotSystemPreservingError(
          "average: element " + std::to_string(i) +
          " fails the system-preservation check (omega " + std::to_string(om) +
          ", moment " + std::to_string(mm) + ")");
  }
  if (opts.verify_table && action.is_finite())
    verify_composition_table(action, opts.probes, 100.0 * opts.precheck_tol);

  SamplingPlan plan = make_plan(layout, moment, opts);
  AveragingResult res;
  res.budget = residual_budget(opts, plan.spatial_h);

  std::vector<FieldPtr> parts;
  std::vector<double> weights;
  std::vector<MatrixXd> linear_parts;
  for (std::size_t i = 0; i < els.size(); ++i) {
    MatrixXd L = linear_part(els[i], 1e-8);
    linear_parts.push_back(L);
    if (linearity_defect(els[i], L, opts.probes) < 10.0 * opts.tol)
      continue;  // zero generator
    GeneratorResult gen = generator_for(els[i], moment, opts);
    parts.push_back(gen.field);
    weights.push_back(action.weights()[i]);
  }

  if (parts.empty()) {
    res.phi = NumericMap::identity(layout);
    res.generator = nullptr;
  } else {
    auto sum = std::make_shared<flows::SumField>(parts, weights);
    res.generator = sum;
    res.phi = NumericMap::flow_step(layout, sum, 1.0, opts.tol);
  }

  // conjugation identity Phi_G o rho(g) = rho(g)^(1) o Phi_G
  for (std::size_t i = 0; i < els.size(); ++i) {
    double worst = 0.0;
    for (const auto& w : opts.probes) {
      VectorXd a = res.phi.apply(els[i].apply(w));
      VectorXd b = linear_parts[i] * res.phi.apply(w);
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    res.conjugation_residuals.push_back(worst);
  }
  res.omega_residual = res.phi.omega_residual(opts.probes);
  res.moment_residual = res.phi.moment_residual(moment, opts.probes);
  res.passed = true;
  for (double r : res.conjugation_residuals)
    if (r >= res.budget) res.passed = false;
  return res;
}

// ------------------------------------------------------------- parametric

ParametricResult average_parametric(
    const std::function<GroupActionSpec(const VectorXd&)>& family,
    const std::vector<VectorXd>& parameter_grid,
    const flows::MomentMap& moment, const AveragingOptions& opts) {
  if (parameter_grid.empty())
    throw PreconditionError("average_parametric: empty parameter grid");
  if (opts.probes.empty())
    throw PreconditionError("average_parametric: probe set required");

  const VectorXd p0 = VectorXd::Zero(parameter_grid[0].size());
  GroupActionSpec base = family(p0);
  const auto& base_els = base.elements();
  const VarLayout layout = base_els[0].layout();

  SamplingPlan plan = make_plan(layout, moment, opts);

  // parameter-zero linear parts rho_0(h)^(1)
  std::vector<MatrixXd> L0;
  for (const auto& e : base_els) L0.push_back(linear_part(e, 1e-8));

  // generator of rho_0 itself (zero when rho_0 is already linear)
  std::vector<bool> base_linear(base_els.size(), true);
  std::vector<FieldPtr> base_gen(base_els.size(), nullptr);
  for (std::size_t j = 0; j < base_els.size(); ++j) {
    if (linearity_defect(base_els[j], L0[j], opts.probes) >= 10.0 * opts.tol) {
      base_linear[j] = false;
      base_gen[j] = generator_for(base_els[j], moment, opts).field;
    }
  }

  ParametricResult out;
  std::vector<std::vector<VectorXd>> phi_on_probes;

  for (const auto& p : parameter_grid) {
    GroupActionSpec action = family(p);
    const auto& els = action.elements();
    if (els.size() != base_els.size())
      throw PreconditionError(
          "average_parametric: family changes the element count");

    std::vector<FieldPtr> parts;
    std::vector<double> weights;
    for (std::size_t j = 0; j < els.size(); ++j) {
      // path N_t = M_t o M_0^{-1} with M_t = rho_0(g)^(1) o rho_{t p}(g)^{-1};
      // its generator composed with the rho_0 generator yields
      // exp = rho_0(g)^(1) o rho_p(g)^{-1} (the Lie algebra is abelian)
      NumericMap lin0 = NumericMap::linear(layout, L0[j]);
      NumericMap M0inv = NumericMap::compose(
          base_els[j], NumericMap::linear(layout, L0[j].inverse()));
      auto N_of = [&family, &layout, lin0, M0inv, p,
                   j](double t) -> NumericMap {
        double s = warp_parameter(t);
        if (s == 0.0) return NumericMap::identity(layout);
        GroupActionSpec at = family((s * p).eval());
        return NumericMap::compose(
            NumericMap::compose(lin0, at.elements()[j].inverse()), M0inv);
      };
      // skip when rho_p(g) equals rho_0(g): path is constant identity
      double moved = 0.0;
      for (const auto& w : opts.probes)
        moved = std::max(
            moved,
            (els[j].apply(w) - base_els[j].apply(w)).cwiseAbs().maxCoeff());
      bool path_trivial = moved < 10.0 * opts.tol;

      if (!path_trivial) {
        flows::PathOfMaps path;
        const int K = opts.path_samples;
        for (int i = 0; i < K; ++i) {
          double t = static_cast<double>(i) / (K - 1);
          path.ts.push_back(t);
          path.maps.push_back(N_of(t));
        }
        const double delta = opts.derivative_step;
        path.derivative = [N_of, delta](double t,
                                        const VectorXd& z) -> VectorXd {
          if (t >= 2.0 * delta)
            return (-N_of(t + 2.0 * delta).apply(z) +
                    8.0 * N_of(t + delta).apply(z) -
                    8.0 * N_of(t - delta).apply(z) +
                    N_of(t - 2.0 * delta).apply(z)) /
                   (12.0 * delta);
          return (-11.0 * N_of(t).apply(z) + 18.0 * N_of(t + delta).apply(z) -
                  9.0 * N_of(t + 2.0 * delta).apply(z) +
                  2.0 * N_of(t + 3.0 * delta).apply(z)) /
                 (6.0 * delta);
        };
        parts.push_back(build_field_from_path(path, moment, plan, opts));
        weights.push_back(action.weights()[j]);
      }
      if (!base_linear[j]) {
        parts.push_back(base_gen[j]);
        weights.push_back(action.weights()[j]);
      }
    }

    AveragingResult res;
    res.budget = residual_budget(opts, plan.spatial_h);
    if (parts.empty()) {
      res.phi = NumericMap::identity(layout);
    } else {
      auto sum = std::make_shared<flows::SumField>(parts, weights);
      res.generator = sum;
      res.phi = NumericMap::flow_step(layout, sum, 1.0, opts.tol);
    }
    for (std::size_t j = 0; j < els.size(); ++j) {
      double worst = 0.0;
      for (const auto& w : opts.probes) {
        VectorXd a = res.phi.apply(els[j].apply(w));
        VectorXd b = L0[j] * res.phi.apply(w);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
      }
      res.conjugation_residuals.push_back(worst);
    }
    res.omega_residual = res.phi.omega_residual(opts.probes);
    res.moment_residual = res.phi.moment_residual(moment, opts.probes);
    res.passed = true;
    for (double r : res.conjugation_residuals)
      if (r >= res.budget) res.passed = false;

    std::vector<VectorXd> vals;
    for (const auto& w : opts.probes) vals.push_back(res.phi.apply(w));
    phi_on_probes.push_back(std::move(vals));
    out.per_parameter.push_back(std::move(res));
  }

  for (std::size_t k = 0; k + 1 < phi_on_probes.size(); ++k) {
    for (std::size_t p = 0; p < opts.probes.size(); ++p) {
      double d = (phi_on_probes[k][p] - phi_on_probes[k + 1][p])
                     .cwiseAbs()
                     .maxCoeff();
      out.continuity_modulus = std::max(out.continuity_modulus, d);
    }
  }
  out.passed = true;
  for (const auto& r : out.per_parameter)
    if (!r.passed) out.passed = false;
  return out;
}

}  // namespace sympnf::avg
