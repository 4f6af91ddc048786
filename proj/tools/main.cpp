// sympnf : command-line front end.
//
// Subcommands: classify, model, flow, exp, pathinv, average, actions,
// counterexample, suite.  All randomness is drawn from one seeded generator,
// reports are JSON written atomically, grid/trace data is CSV with fixed
// 12-digit precision.  Exit codes: 0 all checks passed, 1 a check failed,
// 2 bad input.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "sympnf/actions.hpp"
#include "sympnf/averaging.hpp"
#include "sympnf/counterexample.hpp"
#include "sympnf/json_io.hpp"
#include "sympnf/rng.hpp"

namespace fs = std::filesystem;
using namespace sympnf;
using sympnf::io::json;

namespace {

struct CommonOpts {
  std::string out_dir = ".";
  double tol = 1e-10;
  std::uint64_t seed = 20040712;
  int grid = 9;
  int trials = 5;
};

std::string out_path(const CommonOpts& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  return (fs::path(c.out_dir) / name).string();
}

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> vals;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',' || ch == ';') {
      if (!cur.empty()) vals.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

std::vector<expr::ExprPtr> parse_expr_list(const std::string& text) {
  std::vector<expr::ExprPtr> out;
  std::string cur;
  for (char ch : text + ";") {
    if (ch == ';') {
      if (!cur.empty()) out.push_back(expr::parse(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

// layout inferred from the variables of a plain (x, y) expression
VarLayout infer_xy_layout(const std::vector<expr::ExprPtr>& exprs) {
  int n = 1;
  for (const auto& e : exprs)
    for (const auto& v : expr::variables(e)) {
      if (v[0] != 'x' && v[0] != 'y')
        throw SpecError("expected an expression in x/y variables only");
      n = std::max(n, std::stoi(v.substr(1)));
    }
  return VarLayout::xy_blocks(n);
}

int finish(const CommonOpts& c, const std::string& name, json& report,
           bool passed) {
  report["passed"] = passed;
  io::write_json_atomic(out_path(c, name), report);
  std::cout << (passed ? "[PASS] " : "[FAIL] ") << name << "\n";
  return passed ? 0 : 1;
}

// ------------------------------------------------------------------ classify

int cmd_classify(const CommonOpts& c, const std::string& input, int m,
                 double eps) {
  json in = io::load_json_file(input);
  quad::QuadraticFamily fam = io::family_from_json(in);
  quad::ClassifyOptions opts;
  opts.trials = c.trials;
  opts.eps = eps;
  opts.seed = c.seed;
  json report;
  report["command"] = "classify";
  report["input"] = input;
  report["params"] = {{"m", m}, {"trials", opts.trials}, {"eps", opts.eps},
                      {"seed", opts.seed}};
  auto nd = quad::is_nondegenerate(fam, opts);
  report["nondegenerate"] = nd.ok;
  if (!nd.ok) {
    report["failure"] = nd.failure;
    return finish(c, "classify.json", report, false);
  }
  auto res = quad::williamson_type(fam, m, opts);
  report.update(io::classification_to_json(res));
  report["invariant"] = res.type.k_e + res.type.k_h + 2 * res.type.k_f ==
                        res.type.n - res.type.m;
  return finish(c, "classify.json", report, true);
}

// --------------------------------------------------------------------- model

int cmd_model(const CommonOpts& c, const std::string& input, double eps,
              const std::string& maps_file) {
  json in = io::load_json_file(input);
  models::LinearModel model = io::model_from_json(in);

  std::vector<flows::NumericMap> maps;
  json maps_meta = json::array();
  if (!maps_file.empty()) {
    json mj = io::load_json_file(maps_file);
    for (const auto& pipeline : mj.at("maps")) {
      maps.push_back(io::map_from_json(pipeline, model.layout()));
      maps_meta.push_back("user");
    }
  } else {
    // deterministic sample automorphisms, plus their composition
    SplitMix64 rng(c.seed);
    models::ModelAutomorphism a = models::ModelAutomorphism::identity(model);
    models::ModelAutomorphism b = models::ModelAutomorphism::identity(model);
    for (int i = 0; i < model.m(); ++i) {
      a.torus_translation(i) = rng.uniform01();
      b.torus_translation(i) = rng.uniform01();
    }
    for (int i = 0; i < model.wtype().k_e; ++i)
      a.elliptic_angles(i) = rng.uniform(0, 2 * M_PI);
    for (int j = 0; j < model.wtype().k_h; ++j) {
      a.hyperbolic_log(j) = 0.5 * rng.symmetric();
      b.hyperbolic_sign[j] = -1;
    }
    for (int j = 0; j < model.wtype().k_f; ++j) {
      a.ff_log(j) = 0.4 * rng.symmetric();
      b.ff_angle(j) = rng.uniform(0, 2 * M_PI);
    }
    maps.push_back(models::automorphism_to_map(model, a));
    maps.push_back(models::automorphism_to_map(model, b));
    maps.push_back(flows::NumericMap::compose(maps[0], maps[1]));
    maps_meta = {"automorphism-a", "automorphism-b", "composition"};
  }

  models::StructureOptions opts;
  opts.grid_per_axis = c.grid;
  opts.eps = eps;
  auto reports = models::verify_linear_action_structure(model, maps, opts);

  json report;
  report["command"] = "model";
  report["model"] = io::model_to_json(model);
  report["map_sources"] = maps_meta;
  report["structure"] = io::structure_reports_to_json(reports);
  bool ok = true;
  for (const auto& r : reports)
    if (!r.passed) ok = false;
  return finish(c, "model.json", report, ok);
}

// ---------------------------------------------------------------------- flow

int cmd_flow(const CommonOpts& c, const std::string& hexpr, double time,
             const std::string& pt_text, const std::string& csv_name) {
  auto H = expr::parse(hexpr);
  VarLayout layout = infer_xy_layout({H});
  auto field = std::make_shared<flows::HamiltonianField>(H, layout);
  Eigen::VectorXd pt = parse_vector(pt_text);
  if (pt.size() != layout.dim())
    throw SpecError("point has " + std::to_string(pt.size()) +
                    " coordinates; the expression needs " +
                    std::to_string(layout.dim()));

  std::string csv = "t";
  for (const auto& n : layout.names) csv += "," + n;
  csv += "\n";
  flows::FlowOptions o;
  o.tol = c.tol;
  Eigen::VectorXd end = pt;
  std::vector<double> row(static_cast<std::size_t>(layout.dim()) + 1);
  auto emit = [&](double t, const Eigen::VectorXd& y) {
    row[0] = t;
    for (int i = 0; i < layout.dim(); ++i)
      row[static_cast<std::size_t>(i) + 1] = y(i);
    csv += io::csv_row(row);
  };
  emit(0.0, pt);
  flows::integrate_steps(
      [&field](const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy = field->value(y);
      },
      0.0, time, pt, o, [&](double t, const Eigen::VectorXd& y) {
        emit(t, y);
        end = y;
        return true;
      });
  io::write_text_atomic(out_path(c, csv_name), csv);

  json report;
  report["command"] = "flow";
  report["hamiltonian"] = expr::print(H);
  report["time"] = time;
  report["final"] = std::vector<double>(end.data(), end.data() + end.size());
  report["trace_csv"] = csv_name;
  return finish(c, "flow.json", report, true);
}

// ----------------------------------------------------------------------- exp

int cmd_exp(const CommonOpts& c, const std::string& hexpr,
            const std::string& moment_text, double box_radius, int probes) {
  auto H = expr::parse(hexpr);
  auto comps = parse_expr_list(moment_text);
  std::vector<expr::ExprPtr> all = comps;
  all.push_back(H);
  VarLayout layout = infer_xy_layout(all);
  auto field = std::make_shared<flows::HamiltonianField>(H, layout);
  flows::MomentMap moment(comps, layout);

  flows::ExpOptions o;
  o.tol = c.tol;
  o.precheck_box = flows::Box::cube(layout.dim(), box_radius);
  json report;
  report["command"] = "exp";
  report["hamiltonian"] = expr::print(H);
  auto cloud = flows::probe_cloud(o.precheck_box, probes);
  report["bracket_residual"] = flows::bracket_residual(*field, moment, cloud);
  try {
    flows::NumericMap map = flows::exponential(field, moment, o);
    double om = map.omega_residual(cloud);
    double mm = map.moment_residual(moment, cloud);
    report["omega_residual"] = om;
    report["moment_residual"] = mm;
    bool ok = om < 1000.0 * c.tol && mm < 1000.0 * c.tol;
    return finish(c, "exp.json", report, ok);
  } catch (const NotInAlgebraError& e) {
    report["error"] = e.what();
    return finish(c, "exp.json", report, false);
  }
}

// ------------------------------------------------------------------- pathinv

int cmd_pathinv(const CommonOpts& c, const std::string& hexpr,
                const std::string& moment_text, double time, int samples,
                const std::string& band_text, int probes) {
  auto Z = expr::parse(hexpr);
  auto comps = parse_expr_list(moment_text);
  std::vector<expr::ExprPtr> all = comps;
  all.push_back(Z);
  VarLayout layout = infer_xy_layout(all);
  auto field = std::make_shared<flows::HamiltonianField>(Z, layout);
  flows::MomentMap moment(comps, layout);

  flows::PathOfMaps path;
  for (int i = 0; i < samples; ++i) {
    double t = time * i / (samples - 1);
    path.ts.push_back(static_cast<double>(i) / (samples - 1));
    path.maps.push_back(i == 0 ? flows::NumericMap::identity(layout)
                               : flows::NumericMap::flow_step(layout, field, t,
                                                              c.tol));
  }

  Eigen::VectorXd band = parse_vector(band_text);
  if (band.size() != 2) throw SpecError("--band expects 'clo,chi'");
  flows::FiberFieldOptions fo;
  fo.tol = c.tol;
  fo.c_lo = band(0);
  fo.c_hi = band(1);
  auto rec = flows::path_to_fiber_field(path, moment, fo);

  double worst_field = 0.0, worst_map = 0.0;
  flows::FlowOptions flowo;
  flowo.tol = c.tol;
  for (int i = 1; i <= probes; ++i) {
    double cc = fo.c_lo + (fo.c_hi - fo.c_lo) * (0.1 + 0.8 * halton(i, 2));
    double x = 0.6 + 0.5 * halton(i, 3);
    Eigen::VectorXd w(2);
    w << x, cc / x;
    worst_field = std::max(
        worst_field,
        (rec->value(w) - time * field->value(w)).cwiseAbs().maxCoeff());
    Eigen::VectorXd a = flows::flow(*rec, 1.0, w, flowo);
    Eigen::VectorXd b = path.maps.back().apply(w);
    worst_map = std::max(worst_map, (a - b).cwiseAbs().maxCoeff());
  }
  json report;
  report["command"] = "pathinv";
  report["samples"] = samples;
  report["field_recovery_residual"] = worst_field;
  report["endpoint_residual"] = worst_map;
  report["tangency_residual"] = rec->tangency_residual;
  double dt = 1.0 / (samples - 1);
  double budget = dt * dt + 100.0 * c.tol;  // central differences in t
  report["budget"] = budget;
  return finish(c, "pathinv.json", report, worst_map < budget);
}

// ------------------------------------------------------------------- average

int cmd_average(const CommonOpts& c, const std::string& action_file,
                int samples) {
  json aj = io::load_json_file(action_file);
  avg::GroupActionSpec action = io::action_from_json(aj);
  VarLayout layout = action.elements()[0].layout();
  std::vector<expr::ExprPtr> comps;
  for (const auto& mtext : aj.at("moment"))
    comps.push_back(expr::parse(mtext.get<std::string>()));
  flows::MomentMap moment(comps, layout);

  avg::AveragingOptions o;
  o.tol = c.tol;
  o.path_samples = samples;
  for (const auto& p : aj.at("probes")) {
    Eigen::VectorXd w(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) w(i) = p[i].get<double>();
    o.probes.push_back(w);
  }
  if (aj.contains("field_box")) {
    flows::Box box;
    box.lo.resize(layout.dim());
    box.hi.resize(layout.dim());
    for (int i = 0; i < layout.dim(); ++i) {
      box.lo(i) = aj["field_box"]["lo"][i].get<double>();
      box.hi(i) = aj["field_box"]["hi"][i].get<double>();
    }
    o.field_box = box;
  }
  avg::AveragingResult res = avg::average(action, moment, o);
  json report;
  report["command"] = "average";
  report["budget"] = res.budget;
  report["conjugation_residuals"] = res.conjugation_residuals;
  report["omega_residual"] = res.omega_residual;
  report["moment_residual"] = res.moment_residual;
  return finish(c, "average.json", report, res.passed);
}

// ------------------------------------------------------------------- actions

int cmd_actions(const CommonOpts& c, const std::string& hexpr, double emin,
                double emax, int ne, const std::string& tag_name,
                const std::string& csv_name) {
  actions::PrimitiveTag tag = actions::PrimitiveTag::YdX;
  if (tag_name == "mxdy") tag = actions::PrimitiveTag::MinusXdY;
  else if (tag_name == "mixed") tag = actions::PrimitiveTag::Mixed;
  else if (tag_name != "ydx") throw SpecError("unknown tag '" + tag_name + "'");

  actions::PlanarSystem sys;
  sys.H = expr::parse(hexpr);
  sys.domain = flows::Box::cube(2, 6.0);
  sys.tag = tag;
  actions::TraceOptions to;
  to.tol = std::min(c.tol, 1e-11);

  std::vector<double> Es;
  for (int i = 0; i < ne; ++i)
    Es.push_back(emin + (emax - emin) * i / std::max(1, ne - 1));
  actions::ActionProfile prof = actions::action_profile(sys, Es, to);
  actions::PeriodOneReport rep = actions::verify_period_one(sys, prof, 1e-4, to);

  std::string csv = "E,action,period,dpdE,period_residual\n";
  for (std::size_t i = 0; i < Es.size(); ++i)
    csv += io::csv_row({prof.energies[i], prof.actions[i], prof.periods[i],
                        prof.dpdE[i], std::abs(rep.return_times[i] - 1.0)});
  io::write_text_atomic(out_path(c, csv_name), csv);

  json report;
  report["command"] = "actions";
  report["hamiltonian"] = expr::print(sys.H);
  report["monotone"] = prof.monotone;
  report["conclusive"] = rep.conclusive;
  report["max_duality_residual"] = rep.max_duality_residual;
  report["max_return_residual"] = rep.max_return_residual;
  report["csv"] = csv_name;
  return finish(c, "actions.json", report, rep.passed);
}

// ------------------------------------------------------------ counterexample

int cmd_counterexample(const CommonOpts& c, const std::string& gamma_text,
                       int K, double eps, int N, double threshold, int region,
                       const std::string& scatter_name) {
  Eigen::VectorXd gamma = parse_vector(gamma_text);
  json report;
  report["command"] = "counterexample";
  report["gamma"] =
      std::vector<double>(gamma.data(), gamma.data() + gamma.size());

  auto nr = cex::check_nonresonance(gamma, N, threshold);
  report["nonresonance"] = {
      {"certified", nr.nonresonant},
      {"bound", nr.bound},
      {"threshold", nr.threshold},
      {"worst_value", nr.worst_value},
      {"worst_k", std::vector<int>(nr.worst_k.data(),
                                   nr.worst_k.data() + nr.worst_k.size())}};

  cex::PlateauSpec spec = cex::desk_spec(gamma, K);
  std::vector<double> epsilons(spec.regions.size(), eps);
  cex::PerturbedSystem sys = cex::build_H2(spec, gamma, epsilons);
  json spec_json = json::array();
  for (const auto& r : spec.regions) {
    json rj;
    rj["center"] =
        std::vector<double>(r.center.data(), r.center.data() + r.center.size());
    rj["radius"] = r.radius;
    json slopes = json::array();
    for (auto [p, q] : r.slope) slopes.push_back(json::array({p, q}));
    rj["slope"] = slopes;
    spec_json.push_back(rj);
  }
  report["plateau_spec"] = spec_json;
  io::write_text_atomic(out_path(c, "h2.txt"), expr::print(sys.H2) + "\n");
  report["h2_expression_file"] = "h2.txt";

  Eigen::MatrixXd A = cex::quadratic_part_at_zero(sys.H2, sys.layout());
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(4, 4);
  want(0, 0) = gamma(0);
  want(1, 1) = gamma(1);
  want(2, 2) = gamma(0);
  want(3, 3) = gamma(1);
  double quad_resid = (A - want).cwiseAbs().maxCoeff();
  report["quadratic_part_residual"] = quad_resid;
  double outside = cex::outside_support_residual(sys, 200);
  report["outside_support_residual"] = outside;
  bool support_ok = cex::support_is_inside_regions(sys);
  report["support_inside_regions"] = support_ok;
  double witness = cex::verify_integrability_witness(sys, region);
  report["witness_residual"] = witness;

  cex::DetectOptions dopts;
  dopts.integrator_tol = std::min(c.tol, 1e-10);
  cex::FloquetReport fl = cex::detect_hyperbolic_orbit(sys, region, dopts);
  json flj;
  flj["found"] = fl.found;
  flj["hyperbolic"] = fl.hyperbolic;
  flj["lambda_max"] = fl.lambda_max;
  flj["multiplier_product"] = fl.multiplier_product;
  flj["period"] = fl.period;
  flj["orbit_residual"] = fl.orbit_residual;
  json mults = json::array();
  for (const auto& lam : fl.multipliers)
    mults.push_back(json::array({lam.real(), lam.imag()}));
  flj["multipliers"] = mults;
  if (!fl.diagnostics.empty()) flj["diagnostics"] = fl.diagnostics;
  report["floquet"] = flj;
  auto oracle = cex::pendulum_oracle(sys, region);
  report["pendulum_oracle"] = {
      {"nu", oracle.nu}, {"period", oracle.period}, {"lambda", oracle.lambda}};

  if (!scatter_name.empty()) {
    std::string csv = "t,x1,x2,y2\n";
    for (const auto& row : cex::poincare_scatter(sys, region, 5, 40))
      csv += io::csv_row({row(0), row(1), row(2), row(3)});
    io::write_text_atomic(out_path(c, scatter_name), csv);
    report["scatter_csv"] = scatter_name;
  }

  bool ok = nr.nonresonant && quad_resid < 1e-10 && outside == 0.0 &&
            support_ok && witness < 1e-8 && fl.found && fl.hyperbolic &&
            std::abs(fl.multiplier_product - 1.0) < 1e-6;
  return finish(c, "counterexample.json", report, ok);
}

// --------------------------------------------------------------------- suite

int cmd_suite(const CommonOpts& c) {
  json report;
  report["command"] = "suite";
  report["seed"] = c.seed;
  bool all_ok = true;

  {  // Williamson classification of the model blocks
    json sec;
    quad::ClassifyOptions opts;
    opts.seed = c.seed;
    SymplecticSpace s1(1);
    quad::QuadraticFamily elliptic(s1, {quad::elliptic_block(1, 1)});
    quad::QuadraticFamily hyperbolic(s1, {quad::hyperbolic_block(1, 1)});
    auto [f1, f2] = quad::focus_focus_pair(2, 1);
    quad::QuadraticFamily ff(SymplecticSpace(2), {f1, f2});

    auto re = quad::williamson_type(elliptic, 0, opts);
    auto rh = quad::williamson_type(hyperbolic, 0, opts);
    auto rf = quad::williamson_type(ff, 0, opts);
    sec["elliptic"] = io::classification_to_json(re);
    sec["hyperbolic"] = io::classification_to_json(rh);
    sec["focus_focus"] = io::classification_to_json(rf);
    bool ok = re.type.k_e == 1 && rh.type.k_h == 1 && rf.type.k_f == 1;

    for (int t = 0; t < 5 && ok; ++t) {
      Eigen::MatrixXd S = quad::random_symplectic(2, 0.4, c.seed + t);
      quad::QuadraticFamily conj(
          SymplecticSpace(2),
          {quad::QuadraticHamiltonian(SymplecticSpace(2),
                                      S.transpose() * f1.A * S),
           quad::QuadraticHamiltonian(SymplecticSpace(2),
                                      S.transpose() * f2.A * S)});
      auto rc = quad::williamson_type(conj, 0, opts);
      ok = ok && rc.type.k_f == 1;
    }
    sec["passed"] = ok;
    report["classification"] = sec;
    all_ok = all_ok && ok;
  }

  {  // Lie homomorphism residual on seeded pairs
    SplitMix64 rng(c.seed + 17);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      Eigen::MatrixXd A(4, 4), B(4, 4);
      for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
          A(i, j) = A(j, i) = rng.symmetric();
          B(i, j) = B(j, i) = rng.symmetric();
        }
      SymplecticSpace s(2);
      quad::QuadraticHamiltonian qa(s, A), qb(s, B);
      Eigen::MatrixXd lhs =
          quad::hamiltonian_matrix(quad::poisson_bracket(qa, qb));
      Eigen::MatrixXd Ba = quad::hamiltonian_matrix(qa);
      Eigen::MatrixXd Bb = quad::hamiltonian_matrix(qb);
      worst =
          std::max(worst, (lhs - (Ba * Bb - Bb * Ba)).cwiseAbs().maxCoeff());
    }
    report["lie_homomorphism"] = {{"residual", worst},
                                  {"passed", worst < 1e-10}};
    all_ok = all_ok && worst < 1e-10;
  }

  {  // commuting flows
    VarLayout L1 = VarLayout::xy_blocks(1);
    auto f1 =
        std::make_shared<flows::HamiltonianField>(expr::parse("x1*y1"), L1);
    auto f2 = std::make_shared<flows::HamiltonianField>(
        expr::parse("(x1*y1)^2"), L1);
    flows::MomentMap m({expr::parse("x1*y1")}, L1);
    flows::ExpOptions o;
    o.tol = 1e-11;
    o.precheck_box =
        flows::Box{Eigen::Vector2d(0.1, 0.1), Eigen::Vector2d(1, 1)};
    auto pts = flows::probe_cloud(o.precheck_box, 9);
    double r = flows::verify_commuting_flows(f1, f2, m, 1.0, pts, o);
    report["commuting_flows"] = {{"residual", r}, {"passed", r < 1e-8}};
    all_ok = all_ok && r < 1e-8;
  }

  {  // kernel period of the elliptic exponential (closed form: pi)
    VarLayout L1 = VarLayout::xy_blocks(1);
    Eigen::VectorXd pt(2);
    pt << 0.8, 0.0;
    flows::FlowOptions fo;
    fo.tol = 1e-12;
    auto angle_gap = [&](double cc) {
      auto f = std::make_shared<flows::HamiltonianField>(
          expr::mul(expr::constant(cc), expr::parse("x1^2 + y1^2")), L1);
      Eigen::VectorXd img = flows::flow(*f, 1.0, pt, fo);
      return std::atan2(img(1), img(0));
    };
    double lo = 2.9, hi = 3.3;
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (lo + hi);
      if (angle_gap(mid) > 0)
        lo = mid;
      else
        hi = mid;
    }
    double cstar = 0.5 * (lo + hi);
    double rel = std::abs(cstar - M_PI) / M_PI;
    report["kernel_period"] = {{"located", cstar},
                               {"relative_error", rel},
                               {"passed", rel < 1e-6}};
    all_ok = all_ok && rel < 1e-6;
  }

  {  // Mineur actions for the elliptic block
    actions::PlanarSystem sys = actions::PlanarSystem::make("x1^2 + y1^2", 4.0);
    actions::TraceOptions to;
    to.tol = 1e-12;
    double worst = 0.0;
    for (double E : {0.3, 0.6, 0.9}) {
      double p = actions::action_integral(sys, E, to);
      worst = std::max(worst, std::abs(p - M_PI * E) / (M_PI * E));
    }
    report["mineur_actions"] = {{"relative_residual", worst},
                                {"passed", worst < 1e-6}};
    all_ok = all_ok && worst < 1e-6;
  }

  {  // model structure checks
    models::LinearModel model(2, 1, quad::make_williamson(0, 1, 0, 1, 2),
                              models::TwistingGroup::trivial(1, 1));
    models::ModelAutomorphism a = models::ModelAutomorphism::identity(model);
    a.torus_translation(0) = 0.3;
    a.hyperbolic_log(0) = 0.4;
    Eigen::MatrixXd Sh = Eigen::MatrixXd::Identity(4, 4);
    Sh(1, 0) = 1.0;
    models::StructureOptions so;
    so.grid_per_axis = 7;
    auto reports = models::verify_linear_action_structure(
        model,
        {models::automorphism_to_map(model, a),
         flows::NumericMap::linear(model.layout(), Sh)},
        so);
    bool ok = reports[0].passed && !reports[1].passed;
    report["model_structure"] = {
        {"automorphism_passed", reports[0].passed},
        {"negative_control_rejected", !reports[1].passed},
        {"passed", ok}};
    all_ok = all_ok && ok;
  }

  {  // nonresonance and the plateau function
    Eigen::VectorXd gamma(2);
    gamma << 1.0, std::sqrt(2.0);
    auto nr = cex::check_nonresonance(gamma, 30, 1e-9);
    cex::PlateauSpec spec = cex::desk_spec(gamma, 2);
    auto Q = cex::build_plateau_Q(spec, gamma);
    VarLayout ichart;
    ichart.names = {"I1", "I2"};
    expr::Compiled q(Q, ichart);
    Dual d = q.dual(spec.regions[0].center);
    bool grad_ok = d.g(0) == 1.0 && d.g(1) == 7.0 / 5.0;
    report["counterexample_build"] = {{"nonresonant_to_30", nr.nonresonant},
                                      {"plateau_gradient_exact", grad_ok},
                                      {"passed", nr.nonresonant && grad_ok}};
    all_ok = all_ok && nr.nonresonant && grad_ok;
  }

  return finish(c, "suite.json", report, all_ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"normal-form toolkit for singular orbits of integrable systems"};
  app.require_subcommand(1);
  CommonOpts common;

  std::string input, maps_file, hexpr, moment_text, pt_text, band_text;
  std::string tag_name = "ydx", csv_name = "trace.csv", action_file;
  std::string gamma_text = "1,1.4142135623730951", scatter_name;
  double time = 1.0, eps = 1e-8, emin = 0.1, emax = 1.0, box_radius = 0.8;
  double ctol_threshold = 1e-9, ceps = 1e-3;
  int m = 0, ne = 10, samples = 65, probes = 16, K = 2, N = 50, region = 1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, "output directory");
    sub->add_option("--tol", common.tol, "integrator tolerance");
    sub->add_option("--seed", common.seed, "random seed");
    sub->add_option("--grid", common.grid, "grid resolution per axis");
    sub->add_option("--trials", common.trials, "random draws for genericity");
  };

  auto* classify = app.add_subcommand("classify", "Williamson classification");
  classify->add_option("--in", input, "quadratic family JSON")->required();
  classify->add_option("--m", m, "orbit rank");
  classify->add_option("--eps", eps, "classification tolerance");
  add_common(classify);

  auto* model = app.add_subcommand("model", "linear model structure checks");
  model->add_option("--in", input, "model descriptor JSON")->required();
  model->add_option("--eps", eps, "structure tolerance");
  model->add_option("--maps", maps_file, "JSON file with map pipelines");
  add_common(model);

  auto* flow = app.add_subcommand("flow", "trace a Hamiltonian flow");
  flow->add_option("--ham", hexpr, "Hamiltonian expression")->required();
  flow->add_option("--time", time, "integration time");
  flow->add_option("--pt", pt_text, "start point, comma separated")->required();
  flow->add_option("--csv", csv_name, "trace CSV filename");
  add_common(flow);

  auto* expc = app.add_subcommand("exp", "exponential of a tangent field");
  expc->add_option("--ham", hexpr, "Hamiltonian expression")->required();
  expc->add_option("--moment", moment_text, "moment components, ';' separated")
      ->required();
  expc->add_option("--box", box_radius, "probe box radius");
  expc->add_option("--probes", probes, "probe count");
  add_common(expc);

  auto* pathinv = app.add_subcommand("pathinv", "path right-inverse of exp");
  pathinv->add_option("--ham", hexpr, "generator Hamiltonian")->required();
  pathinv->add_option("--moment", moment_text, "moment components")->required();
  pathinv->add_option("--time", time, "path end time");
  pathinv->add_option("--samples", samples, "path samples (odd)");
  pathinv->add_option("--band", band_text, "fiber band 'clo,chi'")->required();
  pathinv->add_option("--probes", probes, "probe count");
  add_common(pathinv);

  auto* average = app.add_subcommand("average", "group-averaging linearization");
  average->add_option("--action", action_file, "action spec JSON")->required();
  average->add_option("--samples", samples, "path samples (odd)");
  add_common(average);

  auto* actions_cmd = app.add_subcommand("actions", "Mineur action profile");
  actions_cmd->add_option("--ham", hexpr, "planar Hamiltonian")->required();
  actions_cmd->add_option("--emin", emin, "lowest energy");
  actions_cmd->add_option("--emax", emax, "highest energy");
  actions_cmd->add_option("--ne", ne, "number of energies");
  actions_cmd->add_option("--tag", tag_name, "primitive tag: ydx|mxdy|mixed");
  actions_cmd->add_option("--csv", csv_name, "profile CSV filename");
  add_common(actions_cmd);

  auto* cex_cmd = app.add_subcommand("counterexample",
                                     "nonresonant degenerate Hamiltonian");
  cex_cmd->add_option("--gamma", gamma_text, "frequency vector");
  cex_cmd->add_option("--K", K, "number of plateau regions");
  cex_cmd->add_option("--eps", ceps, "perturbation amplitude");
  cex_cmd->add_option("--N", N, "nonresonance search bound");
  cex_cmd->add_option("--threshold", ctol_threshold, "nonresonance threshold");
  cex_cmd->add_option("--region", region, "region index for detection");
  cex_cmd->add_option("--scatter", scatter_name, "Poincare scatter CSV");
  add_common(cex_cmd);

  auto* suite = app.add_subcommand("suite", "deterministic check battery");
  add_common(suite);

  CLI11_PARSE(app, argc, argv);

  try {
    if (classify->parsed()) return cmd_classify(common, input, m, eps);
    if (model->parsed()) return cmd_model(common, input, eps, maps_file);
    if (flow->parsed()) return cmd_flow(common, hexpr, time, pt_text, csv_name);
    if (expc->parsed())
      return cmd_exp(common, hexpr, moment_text, box_radius, probes);
    if (pathinv->parsed())
      return cmd_pathinv(common, hexpr, moment_text, time, samples, band_text,
                         probes);
    if (average->parsed()) return cmd_average(common, action_file, samples);
    if (actions_cmd->parsed())
      return cmd_actions(common, hexpr, emin, emax, ne, tag_name, csv_name);
    if (cex_cmd->parsed())
      return cmd_counterexample(common, gamma_text, K, ceps, N, ctol_threshold,
                                region, scatter_name);
    if (suite->parsed()) return cmd_suite(common);
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
