#include <doctest.h>

#include "mitlsynth/error.hpp"
#include "mitlsynth/scenario.hpp"
#include "mitlsynth/synthesis.hpp"
#include "support.hpp"

using namespace mitlsynth;
using testing::Rng;

namespace {

ClockConstraint x_le(double c) { return ClockConstraint{{{0, Rel::Le, c}}}; }

// q0 -> q1 -> q2 with weights 0.4, 0.4; the clock is reset on entering q0
// only. q2 is accepting with invariant x <= bound and moves on to a copy q3
// that resets the clock and loops on itself.
GlobalBWTS chain(double bound) {
  GlobalBWTS g;
  g.clocks = 1;
  g.clock_offset = {0};
  auto add = [&](bool initial, std::uint64_t z, bool acc, const ClockConstraint& inv) {
    GlobalState s;
    s.initial = initial;
    s.z = z;
    s.accepting = acc;
    s.invariant = g.intern(inv);
    return g.add_state(s);
  };
  add(true, 1, false, {});
  add(false, 0, false, {});
  add(false, 0, true, x_le(bound));
  add(false, 1, true, x_le(bound));
  g.add_edge(0, 1, 0.4);
  g.add_edge(1, 2, 0.4);
  g.add_edge(2, 3, 0.1);
  g.add_edge(3, 3, 0.1);
  g.finalize();
  return g;
}

struct Pipeline {
  Scenario sc;
  Partition part;
  std::vector<WTS> wts;
  std::vector<LocalBWTS> locals;
  ProductBWTS pb;
  GlobalBWTS g;
  TimedRun run;
  Plan plan;
  VerifyReport report;

  explicit Pipeline(const std::string& file) {
    sc = load_scenario(testing::source_path(file));
    part = build_partition(sc.bounds, sc.cuts, sc.regions, sc.walls);
    double horizon = sc.global.horizon();
    std::vector<TaskCheck> checks;
    for (std::size_t k = 0; k < sc.agents.size(); ++k) {
      wts.push_back(build_wts(sc.agents[k], part, {sc.eps, sc.a_tol, true}));
      locals.push_back(local_product(wts.back(), sc.local[k].automaton()));
      horizon = std::max(horizon, sc.local[k].horizon());
      checks.push_back({"agent", sc.local[k].formula, sc.local[k].tba});
    }
    pb = agent_product(locals);
    g = global_product(pb, sc.global.automaton());
    run = find_accepting_run(g);
    plan = project(run, g, pb, locals, wts, 2 * horizon);
    report = verify_plan(plan, checks, {"global", sc.global.formula, sc.global.tba});
  }
};

}  // namespace

TEST_CASE("three-state chain") {
  SUBCASE("deadline met") {
    const auto g = chain(1.0);
    const auto run = find_accepting_run(g);
    REQUIRE(run.states.size() >= 3);
    CHECK(std::vector<int>(run.states.begin(), run.states.begin() + 3) == std::vector<int>{0, 1, 2});
    CHECK(run.times[2] == doctest::Approx(0.8));
    CHECK(replay_feasible(g, run));
    CHECK(testing::exact_lasso_ok(g, run));
    CHECK(run.cycle_length() == 1);
    CHECK(run.states.back() == 3);
  }
  SUBCASE("deadline missed") {
    const auto g = chain(0.5);
    try {
      find_accepting_run(g);
      FAIL("expected NoAcceptingRun");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoAcceptingRun);
      CHECK(std::string(e.what()).find("clock") != std::string::npos);
    }
    CHECK_FALSE(oracle_search(g).has_value());
  }
  SUBCASE("a cycle that never resets a bounded clock is rejected") {
    GlobalBWTS g;
    g.clocks = 1;
    g.clock_offset = {0};
    GlobalState s;
    s.initial = true;
    s.z = 1;
    g.add_state(s);
    s.initial = false;
    s.z = 0;
    s.accepting = true;
    s.invariant = g.intern(x_le(1.0));
    g.add_state(s);
    g.add_edge(0, 1, 0.1);
    g.add_edge(1, 1, 0.1);
    g.finalize();
    // the self loop never resets x, so repeating it breaks x <= 1
    CHECK_THROWS_AS(find_accepting_run(g), Error);
    CHECK_THROWS_AS(oracle_search(g), Error);  // 2|S| steps are too few to see it
    CHECK_FALSE(oracle_search(g, 30).has_value());
  }
  SUBCASE("no accepting state reachable") {
    GlobalBWTS g;
    g.clocks = 1;
    g.clock_offset = {0};
    GlobalState s;
    s.initial = true;
    s.z = 1;
    g.add_state(s);
    s.initial = false;
    s.accepting = true;
    g.add_state(s);
    g.add_edge(0, 0, 0.1);
    g.finalize();
    try {
      find_accepting_run(g);
      FAIL("expected NoAcceptingRun");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("no accepting state reachable") != std::string::npos);
    }
    CHECK_FALSE(oracle_search(g).has_value());
  }
}

TEST_CASE("oracle depth limit") {
  GlobalBWTS g;
  g.clocks = 1;
  g.clock_offset = {0};
  for (int k = 0; k < 5; ++k) {
    GlobalState s;
    s.initial = k == 0;
    s.z = 1;
    s.accepting = k == 4;
    g.add_state(s);
  }
  for (int k = 0; k < 4; ++k) g.add_edge(k, k + 1, 0.5);
  g.add_edge(4, 4, 0.5);
  g.finalize();
  CHECK(oracle_search(g).has_value());
  CHECK(oracle_search(g, 6).has_value());
  try {
    oracle_search(g, 3);
    FAIL("expected DepthExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DepthExceeded);
  }
}

TEST_CASE("Dijkstra variant against the exhaustive search") {
  Rng rng(21);
  int agree = 0, positives = 0;
  const int trials = 400;
  for (int trial = 0; trial < trials; ++trial) {
    const auto g = testing::random_global(rng, 6);
    std::optional<TimedRun> fast;
    try {
      fast = find_accepting_run(g);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoAcceptingRun);
    }
    const auto slow = oracle_search(g, 40);
    if (fast) {
      ++positives;
      CHECK(testing::exact_lasso_ok(g, *fast));
      CHECK(slow.has_value());  // the oracle finds a run whenever the search does
    }
    if (slow) CHECK(testing::exact_lasso_ok(g, *slow));
    agree += fast.has_value() == slow.has_value();
  }
  CHECK(positives > trials / 10);
  CHECK(agree >= trials * 95 / 100);
  MESSAGE("agreement " << agree << "/" << trials << ", " << positives << " runs found");
}

TEST_CASE("search is deterministic") {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = testing::random_global(rng, 6);
    std::optional<TimedRun> a, b;
    try {
      a = find_accepting_run(g);
      b = find_accepting_run(g);
    } catch (const Error&) {
      continue;
    }
    CHECK(a->states == b->states);
    CHECK(a->times == b->times);
  }
}

TEST_CASE("six rooms plan") {
  const Pipeline p("scenarios/six_rooms.json");
  REQUIRE(p.plan.agents.size() == 2);
  const auto& a1 = p.plan.agents[0];
  const auto& a2 = p.plan.agents[1];
  CHECK(a1.cells.size() == a2.cells.size());
  CHECK(a1.cells.size() == p.plan.times.size());
  CHECK(p.plan.times.back() >= p.plan.check_until + 2 * 0.3 - 1e-12);
  CHECK(p.report.all_pass());
  CHECK(p.report.verdicts.size() == 3);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& a = p.plan.agents[k];
    CHECK(a.cells.front() == p.wts[k].initial.front());
    for (std::size_t j = 0; j + 1 < a.cells.size(); ++j) {
      const auto& tr = p.wts[k].transitions[static_cast<std::size_t>(a.controllers[j])];
      CHECK(tr.src == a.cells[j]);
      CHECK(tr.dst == a.cells[j + 1]);
      CHECK(a.departures[j] == p.plan.times[j]);
      CHECK(a.arrivals[j] == doctest::Approx(a.departures[j] + tr.weight));
      CHECK(a.arrivals[j] <= p.plan.times[j + 1] + 1e-12);
    }
  }
  // deadlines of the local tasks on the first visits
  auto first = [&](const AgentSchedule& a, const std::string& label) {
    for (std::size_t j = 0; j < a.cells.size(); ++j)
      if (a.labels[j].count(label)) return p.plan.times[j];
    return -1.0;
  };
  CHECK(first(a1, "r2") >= 0.0);
  CHECK(first(a1, "r2") <= 0.1);
  CHECK(first(a2, "r2") <= 0.1);
  // lifting the projection back gives the run
  for (std::size_t j = 0; j < p.run.states.size(); ++j) {
    const auto& st = p.g.states[static_cast<std::size_t>(p.run.states[j])];
    const auto& tuple = p.pb.states[static_cast<std::size_t>(st.q)];
    for (std::size_t k = 0; k < 2; ++k)
      CHECK(p.locals[k].states[static_cast<std::size_t>(tuple[k])].cell == p.plan.agents[k].cells[j]);
  }
  // bit-identical on a second run
  const Pipeline q("scenarios/six_rooms.json");
  CHECK(dump_json(plan_to_json(p.plan, p.g, p.report)) == dump_json(plan_to_json(q.plan, q.g, q.report)));
}

TEST_CASE("explicit automata give a plan as well") {
  const Pipeline p("scenarios/six_rooms_tba.json");
  CHECK(p.report.all_pass());
}

TEST_CASE("single agent with a trivial global task follows its local run") {
  const Pipeline p("tests/data/strip.json");
  REQUIRE(p.plan.agents.size() == 1);
  for (std::size_t j = 0; j < p.run.states.size(); ++j) {
    const auto& st = p.g.states[static_cast<std::size_t>(p.run.states[j])];
    const int local = p.pb.states[static_cast<std::size_t>(st.q)][0];
    CHECK(p.plan.agents[0].cells[j] == p.locals[0].states[static_cast<std::size_t>(local)].cell);
  }
  CHECK(p.report.all_pass());
}

TEST_CASE("a one-step cycle repeats its cell") {
  WTS w;
  w.cells.push_back(make_rectangle({0.0}, {1.0}, 0));
  w.labels.push_back({"p"});
  w.propositions = {"p"};
  w.initial = {0};
  w.transitions.push_back({0, 0, {}, 0.25});
  w.out.push_back({0});
  TBA t;
  t.locations.push_back({"p", {}, {}, true, true});
  t.edges.push_back({0, 0, {}, {}});
  const std::vector<LocalBWTS> locals{local_product(w, t)};
  const auto pb = agent_product(locals);
  const auto g = global_product(pb, t);
  const auto run = find_accepting_run(g);
  const auto plan = project(run, g, pb, locals, {w}, 1.0);
  CHECK(plan.times.back() >= plan.check_until + 1.0 - 1e-12);
  for (std::size_t j = 0; j < plan.times.size(); ++j) {
    CHECK(plan.agents[0].cells[j] == 0);
    CHECK(plan.times[j] == doctest::Approx(0.25 * static_cast<double>(j)));
  }
}

TEST_CASE("verification catches a late arrival") {
  Plan plan;
  plan.times = {0.0, 0.1, 0.2};
  plan.collective_labels = {{}, {}, {"r2@1"}};
  AgentSchedule a;
  a.cells = {0, 1, 2};
  a.labels = {{}, {}, {"r2"}};
  plan.agents.push_back(a);
  plan.check_until = 0.2;
  const TaskCheck local{"agent 1", mitl::parse("F[0,0.1] r2"), std::nullopt};
  const auto r = verify_plan(plan, {local}, {"global", std::nullopt, std::nullopt});
  CHECK_FALSE(r.verdicts[0].pass);
  CHECK(r.verdicts[1].pass);
  CHECK_FALSE(r.all_pass());
  const auto ok = verify_plan(plan, {{"agent 1", mitl::parse("F[0,0.3] r2"), std::nullopt}},
                              {"global", mitl::Formula::top(), std::nullopt});
  CHECK(ok.all_pass());
}
