#include "mitlsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <queue>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One discrete step: leave u at absolute time t along e. `stamps` holds the
// time each clock was last reset; on success it is updated for the target.
bool step(const GlobalBWTS& g, const GlobalEdge& e, double t, std::vector<double>& stamps,
          std::vector<double>& val) {
  const auto n = stamps.size();
  for (std::size_t k = 0; k < n; ++k) val[k] = t - stamps[k];
  const auto& su = g.states[static_cast<std::size_t>(e.src)];
  if (!g.constraints[static_cast<std::size_t>(su.invariant)].holds(val)) return false;
  if (!g.constraints[static_cast<std::size_t>(e.guard)].holds(val)) return false;
  const auto& sv = g.states[static_cast<std::size_t>(e.dst)];
  for (std::size_t k = 0; k < n; ++k)
    if ((sv.z >> k) & 1u) {
      stamps[k] = t;
      val[k] = 0.0;
    }
  return g.constraints[static_cast<std::size_t>(sv.invariant)].holds(val);
}

struct Node {
  double dist = kInf;
  int pred = -1;
  std::size_t pred_edge = 0;
  std::vector<double> stamps;
  bool settled = false;
};

using Entry = std::pair<double, int>;
using MinQueue = std::priority_queue<Entry, std::vector<Entry>, std::greater<>>;

// Dijkstra where a relaxation is admissible only if the clock values derived
// from the predecessor chain satisfy invariants and guards. Stamps carried on
// each node are the memoized predecessor walk: a clock's stamp is copied from
// the predecessor unless the node's flag says the entering edge reset it.
// When `close` >= 0, edges into `close` are not relaxed but reported through
// `on_close` (cycle search).
struct ClockDijkstra {
  const GlobalBWTS& g;
  std::vector<Node> nodes;
  MinQueue queue;
  SearchStats* stats;

  ClockDijkstra(const GlobalBWTS& graph, SearchStats* st) : g(graph), nodes(graph.size()), stats(st) {}

  void seed(int s, double dist, std::vector<double> stamps) {
    auto& n = nodes[static_cast<std::size_t>(s)];
    n.dist = dist;
    n.stamps = std::move(stamps);
    queue.push({dist, s});
  }

  template <class OnClose, class StopAt>
  void run(int close, OnClose&& on_close, StopAt&& stop_at) {
    std::vector<double> val(static_cast<std::size_t>(g.clocks));
    while (!queue.empty()) {
      const auto [d, u] = queue.top();
      queue.pop();
      auto& nu = nodes[static_cast<std::size_t>(u)];
      if (nu.settled || d > nu.dist) continue;
      if (d >= stop_at()) break;
      nu.settled = true;
      if (stats) ++stats->settled;
      const auto first = g.offsets[static_cast<std::size_t>(u)];
      const auto span = g.out(u);
      for (std::size_t k = 0; k < span.size(); ++k) {
        const auto& e = span[k];
        const double t = nu.dist + e.weight;
        std::vector<double> stamps = nu.stamps;
        if (!step(g, e, t, stamps, val)) {
          if (stats) ++stats->rejected;
          continue;
        }
        if (e.dst == close) {
          on_close(t, u, first + k);
          continue;
        }
        auto& nv = nodes[static_cast<std::size_t>(e.dst)];
        if (nv.settled || !(t < nv.dist)) continue;
        nv.dist = t;
        nv.pred = u;
        nv.pred_edge = first + k;
        nv.stamps = std::move(stamps);
        queue.push({t, e.dst});
      }
    }
  }

  // Walks predecessors back to a seed; returns states and edges in order.
  void path_to(int v, std::vector<int>& states, std::vector<std::size_t>& edges) const {
    std::vector<int> rs{v};
    std::vector<std::size_t> re;
    while (nodes[static_cast<std::size_t>(v)].pred >= 0) {
      re.push_back(nodes[static_cast<std::size_t>(v)].pred_edge);
      v = nodes[static_cast<std::size_t>(v)].pred;
      rs.push_back(v);
    }
    states.assign(rs.rbegin(), rs.rend());
    edges.assign(re.rbegin(), re.rend());
  }
};

bool untimed_reachable_accepting(const GlobalBWTS& g) {
  std::vector<char> seen(g.size(), 0);
  std::deque<int> queue;
  for (int s : g.initial()) {
    seen[static_cast<std::size_t>(s)] = 1;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (g.states[static_cast<std::size_t>(u)].accepting) return true;
    for (const auto& e : g.out(u))
      if (!seen[static_cast<std::size_t>(e.dst)]) {
        seen[static_cast<std::size_t>(e.dst)] = 1;
        queue.push_back(e.dst);
      }
  }
  return false;
}

void fill_times(const GlobalBWTS& g, TimedRun& run) {
  run.times.assign(1, 0.0);
  for (std::size_t e : run.edges) run.times.push_back(run.times.back() + g.edges[e].weight);
}

}  // namespace

bool replay_feasible(const GlobalBWTS& g, const TimedRun& run) {
  const auto& S = run.states;
  if (S.size() < 2 || run.edges.size() + 1 != S.size() || run.loop_start + 1 >= S.size()) return false;
  if (S.back() != S[run.loop_start]) return false;
  for (std::size_t j = 0; j < run.edges.size(); ++j) {
    const auto& e = g.edges[run.edges[j]];
    if (e.src != S[j] || e.dst != S[j + 1]) return false;
  }
  const auto& s0 = g.states[static_cast<std::size_t>(S[0])];
  const auto nclk = static_cast<std::size_t>(g.clocks);
  std::vector<double> stamps(nclk, 0.0), val(nclk, 0.0);
  if (!s0.initial || !g.constraints[static_cast<std::size_t>(s0.invariant)].holds(val)) return false;

  bool has_accepting = false;
  std::uint64_t cycle_resets = 0;
  double cycle_time = 0.0;
  for (std::size_t j = run.loop_start; j < run.edges.size(); ++j) {
    const auto& e = g.edges[run.edges[j]];
    has_accepting = has_accepting || g.states[static_cast<std::size_t>(e.src)].accepting;
    cycle_resets |= g.states[static_cast<std::size_t>(e.dst)].z;
    cycle_time += e.weight;
  }
  if (!has_accepting) return false;

  double t = 0.0;
  for (std::size_t j = 0; j < run.loop_start; ++j) {
    const auto& e = g.edges[run.edges[j]];
    t += e.weight;
    if (!step(g, e, t, stamps, val)) return false;
  }
  const double cmax = g.max_constant();
  const double limit = cycle_time > 0.0 ? std::ceil(cmax / cycle_time) + 3.0 : 2.0;
  for (double iter = 0.0; iter < limit; iter += 1.0) {
    bool settled = iter >= 2.0;
    for (std::size_t k = 0; k < nclk && settled; ++k)
      if (!((cycle_resets >> k) & 1u) && !(t - stamps[k] > cmax)) settled = false;
    if (settled) break;
    for (std::size_t j = run.loop_start; j < run.edges.size(); ++j) {
      const auto& e = g.edges[run.edges[j]];
      t += e.weight;
      if (!step(g, e, t, stamps, val)) return false;
    }
  }
  return true;
}

TimedRun find_accepting_run(const GlobalBWTS& g, SearchStats* stats) {
  if (g.size() == 0) throw Error(Errc::NoAcceptingRun, "empty product");
  const auto nclk = static_cast<std::size_t>(g.clocks);
  ClockDijkstra prefix(g, stats);
  for (int s : g.initial()) prefix.seed(s, 0.0, std::vector<double>(nclk, 0.0));
  prefix.run(-1, [](double, int, std::size_t) {}, [] { return kInf; });

  std::vector<int> candidates;
  for (std::size_t s = 0; s < g.size(); ++s)
    if (g.states[s].accepting && prefix.nodes[s].settled) candidates.push_back(static_cast<int>(s));
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const double da = prefix.nodes[static_cast<std::size_t>(a)].dist;
    const double db = prefix.nodes[static_cast<std::size_t>(b)].dist;
    return da != db ? da < db : a < b;
  });

  for (int a : candidates) {
    if (stats) ++stats->candidates;
    const auto& na = prefix.nodes[static_cast<std::size_t>(a)];
    ClockDijkstra cycle(g, stats);
    cycle.seed(a, na.dist, na.stamps);
    double best = kInf;
    int best_u = -1;
    std::size_t best_edge = 0;
    auto on_close = [&](double t, int u, std::size_t edge) {
      if (t < best) {
        best = t;
        best_u = u;
        best_edge = edge;
      }
    };
    cycle.run(a, on_close, [&] { return best; });
    if (best_u < 0) continue;

    TimedRun run;
    prefix.path_to(a, run.states, run.edges);
    run.loop_start = run.states.size() - 1;
    std::vector<int> cs;
    std::vector<std::size_t> ce;
    cycle.path_to(best_u, cs, ce);
    run.states.insert(run.states.end(), cs.begin() + 1, cs.end());
    run.edges.insert(run.edges.end(), ce.begin(), ce.end());
    run.states.push_back(a);
    run.edges.push_back(best_edge);
    fill_times(g, run);
    if (replay_feasible(g, run)) return run;
    if (stats) ++stats->replay_failures;
  }
  if (!untimed_reachable_accepting(g))
    throw Error(Errc::NoAcceptingRun, "no accepting state reachable");
  if (candidates.empty())
    throw Error(Errc::NoAcceptingRun, "accepting states are reachable only by paths that violate clock constraints");
  throw Error(Errc::NoAcceptingRun, "none of the " + std::to_string(candidates.size()) +
                                        " reachable accepting states closes a clock-feasible cycle");
}

std::optional<TimedRun> oracle_search(const GlobalBWTS& g, std::size_t depth) {
  if (depth == 0) depth = 2 * g.size();
  const auto nclk = static_cast<std::size_t>(g.clocks);
  const double cap = g.max_constant() + 1.0;
  bool truncated = false;

  std::vector<int> states;
  std::vector<std::size_t> edges;
  std::vector<std::vector<double>> vals;  // capped clock values on entry
  std::optional<TimedRun> found;

  auto try_lasso = [&](std::size_t i) {
    TimedRun run;
    run.states = states;
    run.edges = edges;
    run.loop_start = i;
    fill_times(g, run);
    if (replay_feasible(g, run)) found = std::move(run);
  };

  std::function<void(double, const std::vector<double>&)> dfs = [&](double t,
                                                                     const std::vector<double>& stamps) {
    const std::size_t j = states.size() - 1;
    const int s = states[j];
    std::vector<double> v(nclk);
    for (std::size_t k = 0; k < nclk; ++k) v[k] = std::min(t - stamps[k], cap);
    bool repeated = false;
    for (std::size_t i = 0; i < j && !found; ++i) {
      if (states[i] != s) continue;
      try_lasso(i);
      bool same = true;
      for (std::size_t k = 0; k < nclk && same; ++k) same = std::abs(vals[i][k] - v[k]) <= 1e-9;
      repeated = repeated || same;
    }
    if (found || repeated) return;
    if (j >= depth) {
      truncated = true;
      return;
    }
    vals.push_back(v);
    std::vector<double> val(nclk);
    const auto first = g.offsets[static_cast<std::size_t>(s)];
    const auto span = g.out(s);
    for (std::size_t k = 0; k < span.size() && !found; ++k) {
      const auto& e = span[k];
      std::vector<double> next = stamps;
      const double t2 = t + e.weight;
      if (!step(g, e, t2, next, val)) continue;
      states.push_back(e.dst);
      edges.push_back(first + k);
      dfs(t2, next);
      states.pop_back();
      edges.pop_back();
    }
    vals.pop_back();
  };

  for (int s0 : g.initial()) {
    const auto& st = g.states[static_cast<std::size_t>(s0)];
    if (!g.constraints[static_cast<std::size_t>(st.invariant)].holds(std::vector<double>(nclk, 0.0))) continue;
    states.assign(1, s0);
    edges.clear();
    vals.clear();
    dfs(0.0, std::vector<double>(nclk, 0.0));
    if (found) return found;
  }
  if (truncated)
    throw Error(Errc::DepthExceeded, "no lasso within depth " + std::to_string(depth) + " and some path was cut");
  return std::nullopt;
}

Plan project(const TimedRun& run, const GlobalBWTS& g, const ProductBWTS& pb,
             const std::vector<LocalBWTS>& locals, const std::vector<WTS>& wts, double horizon) {
  Plan plan;
  plan.run = run;
  plan.states = run.states;
  plan.times = run.times;
  plan.check_until = run.times.back();
  const double until = plan.check_until + horizon;
  if (run.cycle_length() > 0)
    while (plan.times.back() < until)
      for (std::size_t j = run.loop_start; j < run.edges.size(); ++j) {
        plan.times.push_back(plan.times.back() + g.edges[run.edges[j]].weight);
        plan.states.push_back(run.states[j + 1]);
      }

  for (int s : plan.states)
    plan.collective_labels.push_back(pb.labels[static_cast<std::size_t>(g.states[static_cast<std::size_t>(s)].q)]);

  for (std::size_t k = 0; k < locals.size(); ++k) {
    AgentSchedule a;
    a.agent_id = locals[k].agent_id;
    for (int s : plan.states) {
      const int q = g.states[static_cast<std::size_t>(s)].q;
      const int local = pb.states[static_cast<std::size_t>(q)][k];
      const int cell = locals[k].states[static_cast<std::size_t>(local)].cell;
      a.cells.push_back(cell);
      a.labels.push_back(wts[k].labels[static_cast<std::size_t>(cell)]);
    }
    for (std::size_t j = 0; j + 1 < a.cells.size(); ++j) {
      int ctrl = -1;
      for (int t : wts[k].out[static_cast<std::size_t>(a.cells[j])])
        if (wts[k].transitions[static_cast<std::size_t>(t)].dst == a.cells[j + 1]) ctrl = t;
      a.controllers.push_back(ctrl);
      a.departures.push_back(plan.times[j]);
      a.arrivals.push_back(plan.times[j] + wts[k].transitions[static_cast<std::size_t>(ctrl)].weight);
    }
    plan.agents.push_back(std::move(a));
  }
  return plan;
}

bool VerifyReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const FormulaVerdict& v) { return v.pass; });
}

mitl::TimedWord agent_word(const Plan& plan, std::size_t agent) {
  mitl::TimedWord w;
  const auto& a = plan.agents[agent];
  for (std::size_t j = 0; j < a.cells.size(); ++j) w.push_back({a.labels[j], plan.times[j]});
  return w;
}

mitl::TimedWord collective_word(const Plan& plan) {
  mitl::TimedWord w;
  for (std::size_t j = 0; j < plan.times.size(); ++j) w.push_back({plan.collective_labels[j], plan.times[j]});
  return w;
}

namespace {

FormulaVerdict check(const TaskCheck& task, const mitl::TimedWord& word, double until) {
  FormulaVerdict v;
  v.name = task.name;
  if (task.formula) {
    v.formula = mitl::to_string(*task.formula);
    v.pass = mitl::holds(word, *task.formula, until);
  } else if (task.automaton) {
    v.formula = "(automaton)";
    v.pass = accepts_prefix(*task.automaton, word, until);
  } else {
    v.formula = "true";
    v.pass = true;
  }
  return v;
}

}  // namespace

VerifyReport verify_plan(const Plan& plan, const std::vector<TaskCheck>& locals, const TaskCheck& global) {
  VerifyReport r;
  for (std::size_t k = 0; k < locals.size() && k < plan.agents.size(); ++k)
    r.verdicts.push_back(check(locals[k], agent_word(plan, k), plan.check_until));
  r.verdicts.push_back(check(global, collective_word(plan), plan.check_until));
  return r;
}

ordered_json plan_to_json(const Plan& plan, const GlobalBWTS& g, const VerifyReport& report) {
  ordered_json j;
  ordered_json lasso;
  lasso["prefix_length"] = plan.run.loop_start;
  lasso["cycle_length"] = plan.run.cycle_length();
  lasso["states"] = plan.run.states;
  lasso["times"] = plan.run.times;
  j["lasso"] = std::move(lasso);
  j["check_until"] = plan.check_until;
  ordered_json coll = ordered_json::array();
  for (std::size_t i = 0; i < plan.states.size(); ++i) {
    const auto& st = g.states[static_cast<std::size_t>(plan.states[i])];
    coll.push_back({{"state", plan.states[i]},
                    {"time", plan.times[i]},
                    {"q", st.q},
                    {"s", st.s},
                    {"l", st.l},
                    {"labels", std::vector<std::string>(plan.collective_labels[i].begin(),
                                                        plan.collective_labels[i].end())}});
  }
  j["collective"] = std::move(coll);
  ordered_json agents = ordered_json::array();
  for (const auto& a : plan.agents) {
    ordered_json aj;
    aj["agent"] = a.agent_id;
    aj["cells"] = a.cells;
    ordered_json steps = ordered_json::array();
    for (std::size_t s = 0; s < a.controllers.size(); ++s)
      steps.push_back({{"from", a.cells[s]},
                       {"to", a.cells[s + 1]},
                       {"controller", a.controllers[s]},
                       {"depart", a.departures[s]},
                       {"arrive_bound", a.arrivals[s]}});
    aj["schedule"] = std::move(steps);
    agents.push_back(std::move(aj));
  }
  j["agents"] = std::move(agents);
  ordered_json ver = ordered_json::array();
  for (const auto& v : report.verdicts)
    ver.push_back({{"name", v.name}, {"formula", v.formula}, {"pass", v.pass}});
  j["verification"] = std::move(ver);
  j["all_pass"] = report.all_pass();
  return j;
}

}  // namespace mitlsynth
