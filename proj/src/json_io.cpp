#include "sympnf/json_io.hpp"

#include <cstdio>
#include <fstream>

#include "sympnf/errors.hpp"

namespace sympnf::io {

namespace {

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw SpecError("matrix JSON must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd A(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw SpecError("ragged matrix JSON");
    for (std::size_t c = 0; c < cols; ++c) A(r, c) = j[r][c].get<double>();
  }
  return A;
}

json matrix_to_json(const Eigen::MatrixXd& A) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < A.cols(); ++c) row.push_back(A(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

quad::QuadraticFamily family_from_json(const json& j) {
  if (!j.contains("n") || !j.contains("members"))
    throw SpecError("family JSON needs fields 'n' and 'members'");
  int n = j["n"].get<int>();
  SymplecticSpace space(n);
  std::vector<quad::QuadraticHamiltonian> members;
  for (const auto& mj : j["members"])
    members.emplace_back(space, matrix_from_json(mj));
  return quad::QuadraticFamily(space, std::move(members));
}

json family_to_json(const quad::QuadraticFamily& fam) {
  json j;
  j["n"] = fam.space.n;
  json members = json::array();
  for (const auto& m : fam.members) members.push_back(matrix_to_json(m.A));
  j["members"] = members;
  return j;
}

json classification_to_json(const quad::ClassificationResult& res) {
  json j;
  j["k_e"] = res.type.k_e;
  j["k_h"] = res.type.k_h;
  j["k_f"] = res.type.k_f;
  j["m"] = res.type.m;
  j["n"] = res.type.n;
  json eigs = json::array();
  for (const auto& lam : res.eigenvalues)
    eigs.push_back(json::array({lam.real(), lam.imag()}));
  j["eigenvalues"] = eigs;
  return j;
}

models::LinearModel model_from_json(const json& j) {
  int n = j.at("n").get<int>();
  int m = j.at("m").get<int>();
  int k_e = j.at("k_e").get<int>();
  int k_h = j.at("k_h").get<int>();
  int k_f = j.at("k_f").get<int>();
  std::vector<models::TwistGenerator> gens;
  if (j.contains("gamma")) {
    for (const auto& gj : j["gamma"]) {
      models::TwistGenerator gen;
      if (gj.contains("flips"))
        for (const auto& f : gj["flips"]) gen.flips.push_back(f.get<int>());
      if (gj.contains("translation"))
        for (const auto& t : gj["translation"])
          gen.translation.push_back(models::Rational::mod1(
              t[0].get<long long>(), t[1].get<long long>()));
      gens.push_back(std::move(gen));
    }
  }
  double p_radius = j.value("p_radius", 1.0);
  double xy_radius = j.value("xy_radius", 1.0);
  auto wtype = quad::make_williamson(k_e, k_h, k_f, m, n);
  auto gamma = gens.empty() ? models::TwistingGroup::trivial(k_h, m)
                            : models::TwistingGroup::generated(gens, k_h, m);
  return models::LinearModel(n, m, wtype, std::move(gamma), p_radius,
                             xy_radius);
}

json model_to_json(const models::LinearModel& model) {
  json j;
  j["n"] = model.n();
  j["m"] = model.m();
  j["k_e"] = model.wtype().k_e;
  j["k_h"] = model.wtype().k_h;
  j["k_f"] = model.wtype().k_f;
  j["p_radius"] = model.p_radius();
  j["xy_radius"] = model.xy_radius();
  j["gamma_order"] = model.gamma().size();
  return j;
}

flows::NumericMap map_from_json(const json& pipeline, const VarLayout& layout,
                                double default_tol) {
  std::vector<flows::Primitive> prims;
  for (const auto& pj : pipeline) {
    std::string type = pj.at("type").get<std::string>();
    if (type == "matrix") {
      Eigen::MatrixXd A = matrix_from_json(pj.at("A"));
      Eigen::VectorXd b = Eigen::VectorXd::Zero(layout.dim());
      if (pj.contains("b"))
        for (int i = 0; i < layout.dim(); ++i) b(i) = pj["b"][i].get<double>();
      prims.push_back(flows::AffinePrimitive{A, b});
    } else if (type == "flow") {
      auto field = std::make_shared<flows::HamiltonianField>(
          expr::parse(pj.at("hamiltonian").get<std::string>()), layout);
      prims.push_back(flows::FlowPrimitive{
          field, pj.at("time").get<double>(), pj.value("tol", default_tol)});
    } else {
      throw SpecError("unknown map primitive type '" + type + "'");
    }
  }
  flows::NumericMap map(layout, std::move(prims));
  // construction-time symplecticity probe of each primitive
  auto probes = flows::probe_cloud(flows::Box::cube(layout.dim(), 0.5), 3);
  double r = map.primitive_omega_residual(probes);
  if (r > 1e-6)
    throw NotSystemPreservingError(
        "map pipeline has a non-symplectic primitive (residual " +
        std::to_string(r) + ")");
  return map;
}

avg::GroupActionSpec action_from_json(const json& j) {
  int m = j.value("m", 0);
  int k = j.at("k").get<int>();
  VarLayout layout = m == 0 ? VarLayout::xy_blocks(k) : VarLayout::model(m, k);
  std::vector<flows::NumericMap> elements;
  for (const auto& ej : j.at("elements"))
    elements.push_back(map_from_json(ej, layout));
  return avg::GroupActionSpec::finite(std::move(elements));
}

json structure_reports_to_json(
    const std::vector<models::MapStructureReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) {
    json j;
    j["system_preserving"] = r.system_preserving;
    j["omega_residual"] = r.omega_residual;
    j["moment_residual"] = r.moment_residual;
    j["translation_scatter"] = r.translation_scatter;
    j["translation_p_variation"] = r.translation_p_variation;
    j["fiber_linear_deviation"] = r.fiber_linear_deviation;
    j["passed"] = r.passed;
    if (!r.note.empty()) j["note"] = r.note;
    arr.push_back(j);
  }
  return arr;
}

std::string csv_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

std::string csv_row(const std::vector<double>& vals) {
  std::string out;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (i) out += ",";
    out += csv_cell(vals[i]);
  }
  out += "\n";
  return out;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp + "' for writing");
    f << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw Error("cannot rename temp file into '" + path + "'");
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw SpecError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace sympnf::io
