// json_io.hpp : JSON schemas for the external interfaces and atomic report
// output.
//
// Quadratic family:  { "n": int, "members": [ [[row], ...], ... ] }
// Model descriptor:  { "n": int, "m": int, "k_e": int, "k_h": int,
//                      "k_f": int, "gamma": [ { "flips": [int...],
//                      "translation": [[num, den], ...] } ],
//                      "p_radius": x, "xy_radius": x }
// Map pipeline:      [ { "type": "matrix", "A": [[...]], "b": [...] },
//                      { "type": "flow", "hamiltonian": "expr",
//                        "time": t, "tol": x } ]
// Action spec:       { "m": int, "k": int, "elements": [pipeline, ...] }

#pragma once

#include <json.hpp>

#include <string>

#include "sympnf/averaging.hpp"
#include "sympnf/models.hpp"
#include "sympnf/quadratic.hpp"

namespace sympnf::io {

using nlohmann::json;

quad::QuadraticFamily family_from_json(const json& j);
json family_to_json(const quad::QuadraticFamily& fam);
json classification_to_json(const quad::ClassificationResult& res);

models::LinearModel model_from_json(const json& j);
json model_to_json(const models::LinearModel& model);

flows::NumericMap map_from_json(const json& pipeline, const VarLayout& layout,
                                double default_tol = 1e-10);
avg::GroupActionSpec action_from_json(const json& j);

json structure_reports_to_json(
    const std::vector<models::MapStructureReport>& reports);

// fixed-precision CSV cell/row helpers (12 significant digits, %.12e)
std::string csv_cell(double v);
std::string csv_row(const std::vector<double>& vals);

// write via temp file + rename in the target directory
void write_text_atomic(const std::string& path, const std::string& content);
void write_json_atomic(const std::string& path, const json& j);

json load_json_file(const std::string& path);

}  // namespace sympnf::io
