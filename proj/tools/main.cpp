// mitlsynth: batch driver for abstraction, planning, simulation and reports.

#include <cmath>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "mitlsynth/pipeline.hpp"

using namespace mitlsynth;

int main(int argc, char** argv) {
  CLI::App app{"Control synthesis for multi-agent linear systems under bounded MITL tasks"};
  app.require_subcommand(1);

  std::string scenario;
  PipelineOptions opts;
  const double unset = std::numeric_limits<double>::quiet_NaN();
  double eps = unset, step = unset, margin = unset;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
    auto* s = cmd->add_option("--scenario", scenario, "scenario JSON file");
    if (needs_scenario) s->required();
    cmd->add_option("--out", opts.out_dir, "artifact directory")->capture_default_str();
    cmd->add_option("--eps", eps, "exit-velocity margin of the controller LP");
    cmd->add_option("--step", step, "RK4 step size");
    cmd->add_option("--margin", margin, "switching margin as a fraction of cell width");
    cmd->add_flag("--oracle", opts.oracle, "also run the exhaustive lasso search");
    cmd->add_flag("--dump-products", opts.dump_products, "write every product as JSON");
    cmd->add_option("--seed", opts.seed, "seed for randomized harnesses");
  };

  auto* abstract_cmd = app.add_subcommand("abstract", "build and write the WTS of every agent");
  auto* plan_cmd = app.add_subcommand("plan", "abstract, build products, search and verify");
  auto* simulate_cmd = app.add_subcommand("simulate", "plan, then integrate the closed loops");
  auto* check_cmd = app.add_subcommand("check", "re-verify an existing plan.json");
  auto* report_cmd = app.add_subcommand("report", "summarize the artifacts in --out");
  auto* all_cmd = app.add_subcommand("all", "every stage followed by the report");
  for (auto* c : {abstract_cmd, plan_cmd, simulate_cmd, check_cmd, all_cmd}) add_common(c, true);
  add_common(report_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInput;
  }
  if (!std::isnan(eps)) opts.eps = eps;
  if (!std::isnan(step)) opts.step = step;
  if (!std::isnan(margin)) opts.margin = margin;

  if (*report_cmd) return run_report(opts.out_dir, std::cout, std::cerr);
  if (*check_cmd) return run_check(scenario, opts, std::cout);
  Stage stage = Stage::All;
  if (*abstract_cmd) stage = Stage::Abstract;
  if (*plan_cmd) stage = Stage::Plan;
  if (*simulate_cmd) stage = Stage::Simulate;
  return run_pipeline(scenario, stage, opts, std::cout);
}
