#include "mitlsynth/scenario.hpp"

#include <filesystem>
#include <fstream>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

namespace fs = std::filesystem;
using nlohmann::json;

TBA TaskSpec::automaton() const {
  if (tba) return *tba;
  if (formula) return compile(*formula);
  return compile(mitl::Formula::top());
}

double TaskSpec::horizon() const {
  if (formula) return formula->max_bound();
  if (tba) return tba->max_constant();
  return 0.0;
}

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(Errc::SchemaError, msg); }

const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) schema(where + ": missing '" + key + "'");
  return j.at(key);
}

double real(const json& j, const std::string& where) {
  if (!j.is_number()) schema(where + ": expected a number");
  return j.get<double>();
}

std::vector<double> reals(const json& j, const std::string& where) {
  if (!j.is_array()) schema(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(real(v, where));
  return out;
}

Mat matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) schema(where + ": expected a nested array");
  const auto rows = j.size(), cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto row = reals(j[r], where);
    if (row.size() != cols) schema(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

Rectangle box(const json& j, const std::string& where) {
  try {
    return make_rectangle(reals(need(j, "a", where), where), reals(need(j, "b", where), where));
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaError) throw;
    schema(where + ": " + e.what());
  }
}

TaskSpec task(const json& j, const std::string& base_dir, const std::string& where) {
  TaskSpec t;
  if (j.is_string()) {
    t.text = j.get<std::string>();
    t.formula = mitl::parse(t.text);
    return t;
  }
  if (j.is_object() && j.contains("formula")) {
    if (!j["formula"].is_string()) schema(where + ": 'formula' must be a string");
    return task(j["formula"], base_dir, where);
  }
  if (j.is_object() && j.contains("tba")) {
    if (!j["tba"].is_string()) schema(where + ": 'tba' must be a path");
    fs::path p = j["tba"].get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    t.text = p.string();
    t.tba = load_tba(t.text);
    return t;
  }
  schema(where + ": a task is a formula string, {\"formula\": ...} or {\"tba\": path}");
}

}  // namespace

Scenario scenario_from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object()) schema("scenario must be a JSON object");
  if (!j.contains("schema") || j["schema"] != 1) schema("unsupported or missing \"schema\" version (expected 1)");
  Scenario sc;
  sc.name = j.value("name", std::string("scenario"));
  sc.bounds = box(need(j, "workspace", "scenario"), "workspace");
  if (j.contains("cuts")) {
    if (!j["cuts"].is_array()) schema("'cuts' must be an array per axis");
    for (const auto& axis : j["cuts"]) sc.cuts.push_back(reals(axis, "cuts"));
  }
  if (j.contains("regions")) {
    for (const auto& r : j["regions"]) {
      const auto& label = need(r, "label", "region");
      if (!label.is_string()) schema("region label must be a string");
      sc.regions.push_back({label.get<std::string>(), box(r, "region " + label.get<std::string>())});
    }
  }
  if (j.contains("walls")) {
    for (const auto& w : j["walls"]) {
      if (!w.is_array() || w.size() != 2 || !w[0].is_number_integer() || !w[1].is_number_integer())
        schema("a wall is a pair of cell ids");
      sc.walls.emplace_back(w[0].get<int>(), w[1].get<int>());
    }
  }
  const auto& agents = need(j, "agents", "scenario");
  if (!agents.is_array() || agents.empty()) schema("'agents' must be a non-empty array");
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const auto& a = agents[k];
    const std::string where = "agent " + std::to_string(k + 1);
    LinearAgent ag;
    ag.id = a.value("id", static_cast<int>(k + 1));
    ag.A = matrix(need(a, "A", where), where + " A");
    ag.B = matrix(need(a, "B", where), where + " B");
    const auto x0 = reals(need(a, "x0", where), where + " x0");
    ag.x0 = Eigen::Map<const Vec>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    ag.u_max = real(need(a, "u_max", where), where + " u_max");
    if (ag.A.rows() != ag.A.cols() || ag.B.rows() != ag.A.rows() || ag.x0.size() != ag.A.rows())
      schema(where + ": inconsistent A, B, x0 dimensions");
    if (!(ag.u_max > 0.0)) schema(where + ": u_max must be positive");
    sc.agents.push_back(std::move(ag));
    sc.local.push_back(a.contains("task") ? task(a["task"], base_dir, where) : TaskSpec{});
  }
  if (j.contains("global")) sc.global = task(j["global"], base_dir, "global");
  if (j.contains("parameters")) {
    const auto& p = j["parameters"];
    if (p.contains("eps")) sc.eps = real(p["eps"], "eps");
    if (p.contains("h")) sc.h = real(p["h"], "h");
    if (p.contains("margin")) sc.margin = real(p["margin"], "margin");
    if (p.contains("a_tol")) sc.a_tol = real(p["a_tol"], "a_tol");
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open scenario " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  return scenario_from_json(j, fs::path(path).parent_path().string());
}

}  // namespace mitlsynth
