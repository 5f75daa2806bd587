#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/mitl.hpp"
#include "mitlsynth/tba.hpp"

namespace mitlsynth {

/// A task is either a formula in the supported fragment or an explicit TBA.
struct TaskSpec {
  std::string text;  // formula text, or the TBA path
  std::optional<mitl::Formula> formula;
  std::optional<TBA> tba;

  TBA automaton() const;
  /// Largest time constant the task mentions.
  double horizon() const;
};

struct Scenario {
  std::string name;
  Rectangle bounds;
  std::vector<std::vector<double>> cuts;
  std::vector<LabeledRegion> regions;
  std::vector<std::pair<int, int>> walls;
  std::vector<LinearAgent> agents;
  std::vector<TaskSpec> local;
  TaskSpec global;
  double eps = 0.05;
  double h = 1e-4;
  double margin = 0.02;
  double a_tol = kDefaultDiagTol;
};

/// `base_dir` resolves relative TBA paths. Throws SchemaError on any
/// structural problem (JSON syntax errors carry the byte position).
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);
Scenario load_scenario(const std::string& path);

}  // namespace mitlsynth
