#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/automata.hpp"
#include "mitlsynth/error.hpp"
#include "mitlsynth/scenario.hpp"
#include "mitlsynth/simulation.hpp"
#include "mitlsynth/synthesis.hpp"

namespace mitlsynth {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInput = 2,
  kExitNoRun = 3,
};

int exit_code_for(Errc code);

struct PipelineOptions {
  std::string out_dir = "out";
  std::optional<double> eps;
  std::optional<double> step;
  std::optional<double> margin;
  bool oracle = false;
  bool dump_products = false;
  bool parallel = true;
  std::uint64_t seed = 0;
};

enum class Stage { Abstract, Plan, Simulate, All };

struct OracleOutcome {
  bool ran = false;
  bool feasible = false;
  std::string note;
};

/// Everything the pipeline built, kept for callers that inspect the layers.
struct PipelineState {
  Scenario scenario;
  Partition partition;
  std::vector<WTS> wts;
  std::vector<TBA> local_tba;
  TBA global_tba;
  std::vector<LocalBWTS> locals;
  ProductBWTS product;
  GlobalBWTS global;
  SearchStats stats;
  TimedRun run;
  Plan plan;
  VerifyReport verify;
  OracleOutcome oracle;
  Trajectory trajectory;
};

/// Runs the stages up to `stage`, writing artifacts under opts.out_dir.
/// Returns the process exit code; errors are reported on `log` prefixed with
/// the stage that raised them.
int run_pipeline(const std::string& scenario_path, Stage stage, const PipelineOptions& opts, std::ostream& log,
                 PipelineState* keep = nullptr);

/// Re-verifies an existing plan.json against the scenario's tasks.
int run_check(const std::string& scenario_path, const PipelineOptions& opts, std::ostream& log);

/// Text summary of the artifacts in `out_dir`. Throws MissingArtifact.
std::string report(const std::string& out_dir);
int run_report(const std::string& out_dir, std::ostream& out, std::ostream& log);

}  // namespace mitlsynth
