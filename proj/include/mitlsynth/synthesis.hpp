#pragma once

// Accepting-lasso search over the global product, an exhaustive backstop for
// small graphs, and projection of a run onto per-agent schedules.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/automata.hpp"
#include "mitlsynth/json_out.hpp"
#include "mitlsynth/mitl.hpp"

namespace mitlsynth {

/// Lasso over the global product: states[loop_start..] is the cycle and the
/// last state equals states[loop_start]. edges[j] leads from states[j] to
/// states[j+1]; times[j] is the stamp at which states[j] is entered.
struct TimedRun {
  std::vector<int> states;
  std::vector<std::size_t> edges;
  std::vector<double> times;
  std::size_t loop_start = 0;

  std::size_t cycle_length() const { return states.size() - 1 - loop_start; }
};

struct SearchStats {
  std::size_t settled = 0;
  std::size_t rejected = 0;       // relaxations refused by a clock constraint
  std::size_t candidates = 0;     // accepting states tried
  std::size_t replay_failures = 0;
};

/// Checks the lasso with exact clock values, repeating the cycle until every
/// clock that the cycle never resets is past the largest constant.
bool replay_feasible(const GlobalBWTS& g, const TimedRun& run);

/// Modified Dijkstra with predecessor-derived clock valuations. Prefix from
/// the initial states, then the cheapest cycle back through an accepting
/// state; accepting states are tried by (prefix time, id).
/// Throws NoAcceptingRun.
TimedRun find_accepting_run(const GlobalBWTS& g, SearchStats* stats = nullptr);

/// Depth-first enumeration with exact clocks. Returns the first feasible
/// lasso in lexicographic order, or nothing. Throws DepthExceeded when no
/// lasso was found but some path hit the depth limit (0 means 2|S|).
std::optional<TimedRun> oracle_search(const GlobalBWTS& g, std::size_t depth = 0);

struct AgentSchedule {
  int agent_id = 1;
  std::vector<int> cells;
  std::vector<PropSet> labels;
  std::vector<int> controllers;     // WTS transition per step, size cells-1
  std::vector<double> departures;   // collective stamp at which each step starts
  std::vector<double> arrivals;     // departure + own worst-case time
};

struct Plan {
  TimedRun run;
  std::vector<int> states;     // unrolled global states
  std::vector<double> times;   // collective stamps
  std::vector<PropSet> collective_labels;
  std::vector<AgentSchedule> agents;
  double check_until = 0.0;    // stamp closing the first cycle
};

/// Unrolls the lasso until `horizon` past the end of its first cycle and
/// splits it per agent.
Plan project(const TimedRun& run, const GlobalBWTS& g, const ProductBWTS& pb,
             const std::vector<LocalBWTS>& locals, const std::vector<WTS>& wts, double horizon);

struct FormulaVerdict {
  std::string name;
  std::string formula;
  bool pass = false;
};

struct VerifyReport {
  std::vector<FormulaVerdict> verdicts;
  bool all_pass() const;
};

/// Re-evaluates every task on the words the plan produces. A formula given
/// as an explicit automaton is checked with that automaton instead.
struct TaskCheck {
  std::string name;
  std::optional<mitl::Formula> formula;
  std::optional<TBA> automaton;
};

mitl::TimedWord agent_word(const Plan& plan, std::size_t agent);
mitl::TimedWord collective_word(const Plan& plan);
VerifyReport verify_plan(const Plan& plan, const std::vector<TaskCheck>& locals, const TaskCheck& global);

ordered_json plan_to_json(const Plan& plan, const GlobalBWTS& g, const VerifyReport& report);

}  // namespace mitlsynth
