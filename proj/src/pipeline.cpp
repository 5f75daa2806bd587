#include "mitlsynth/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mitlsynth {

namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NoAcceptingRun: return kExitNoRun;
    case Errc::SchemaError:
    case Errc::Io:
    case Errc::MissingArtifact: return kExitInput;
    default: return kExitFailure;
  }
}

namespace {

// Exhaustive search is exponential; beyond this many global states the
// backstop is skipped and the report says so.
constexpr std::size_t kOracleStateLimit = 20000;

std::vector<TaskCheck> local_checks(const Scenario& sc) {
  std::vector<TaskCheck> out;
  for (std::size_t k = 0; k < sc.agents.size(); ++k)
    out.push_back({"agent " + std::to_string(sc.agents[k].id), sc.local[k].formula, sc.local[k].tba});
  return out;
}

TaskCheck global_check(const Scenario& sc) { return {"global", sc.global.formula, sc.global.tba}; }

void apply_overrides(Scenario& sc, const PipelineOptions& opts) {
  if (opts.eps) sc.eps = *opts.eps;
  if (opts.step) sc.h = *opts.step;
  if (opts.margin) sc.margin = *opts.margin;
}

std::string path_in(const PipelineOptions& opts, const std::string& file) {
  return (fs::path(opts.out_dir) / file).string();
}

std::string big(const BigInt& v) { return v.str(); }

ordered_json sizes_json(const PipelineState& st) {
  ordered_json j;
  ordered_json wts = ordered_json::array();
  for (const auto& w : st.wts) {
    std::size_t dropped = 0;
    for (const auto& d : w.diagnostics) dropped += d.rfind("dropped", 0) == 0;
    wts.push_back({{"agent", w.agent_id},
                   {"states", w.size()},
                   {"transitions", w.transitions.size()},
                   {"dropped", dropped}});
  }
  j["wts"] = std::move(wts);
  ordered_json loc = ordered_json::array();
  for (std::size_t k = 0; k < st.locals.size(); ++k)
    loc.push_back({{"agent", st.locals[k].agent_id},
                   {"tba_locations", st.local_tba[k].size()},
                   {"clocks", st.local_tba[k].clocks},
                   {"unpruned_states", st.locals[k].unpruned_states},
                   {"states", st.locals[k].size()},
                   {"transitions", st.locals[k].transitions.size()}});
  j["local"] = std::move(loc);
  j["agent_product"] = {{"states", st.product.size()}, {"transitions", st.product.transitions.size()}};
  j["global"] = {{"tba_locations", st.global_tba.size()},
                 {"clocks", st.global_tba.clocks},
                 {"states", st.global.size()},
                 {"transitions", st.global.edges.size()}};
  std::vector<BigInt> ws, as;
  std::vector<int> ms;
  for (std::size_t k = 0; k < st.wts.size(); ++k) {
    ws.emplace_back(st.wts[k].size());
    as.emplace_back(st.local_tba[k].size());
    ms.push_back(st.local_tba[k].clocks);
  }
  j["state_bound"] = big(state_bound(ws, as, ms, BigInt(st.global_tba.size()), st.global_tba.clocks));
  return j;
}

void log_sizes(const ordered_json& sizes, std::ostream& log) {
  for (const auto& w : sizes["wts"])
    log << "  WTS agent " << w["agent"] << ": " << w["states"] << " states, " << w["transitions"]
        << " transitions\n";
  for (const auto& l : sizes["local"])
    log << "  local BWTS agent " << l["agent"] << ": " << l["states"] << " states (" << l["unpruned_states"]
        << " before pruning), TBA " << l["tba_locations"] << " locations / " << l["clocks"] << " clocks\n";
  log << "  agent product: " << sizes["agent_product"]["states"] << " states\n";
  log << "  global BWTS: " << sizes["global"]["states"] << " states, " << sizes["global"]["transitions"]
      << " transitions (bound " << sizes["state_bound"].get<std::string>() << ")\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
}

}  // namespace

int run_pipeline(const std::string& scenario_path, Stage stage, const PipelineOptions& opts, std::ostream& log,
                 PipelineState* keep) {
  PipelineState local_state;
  PipelineState& st = keep ? *keep : local_state;
  std::string current = "scenario";
  try {
    st.scenario = load_scenario(scenario_path);
    apply_overrides(st.scenario, opts);
    auto& sc = st.scenario;
    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw Error(Errc::Io, "cannot create output directory " + opts.out_dir);

    current = "abstract";
    st.partition = build_partition(sc.bounds, sc.cuts, sc.regions, sc.walls);
    WtsOptions wopts;
    wopts.eps = sc.eps;
    wopts.diag_tol = sc.a_tol;
    wopts.parallel = opts.parallel;
    st.wts.clear();
    for (const auto& agent : sc.agents) {
      st.wts.push_back(build_wts(agent, st.partition, wopts));
      write_json_file(path_in(opts, "wts_" + std::to_string(agent.id) + ".json"), wts_to_json(st.wts.back()));
      for (const auto& d : st.wts.back().diagnostics) log << "  [agent " << agent.id << "] " << d << '\n';
    }
    log << "abstract: " << st.partition.size() << " cells\n";
    if (stage == Stage::Abstract) return kExitOk;

    current = "compile";
    st.local_tba.clear();
    for (const auto& t : sc.local) st.local_tba.push_back(t.automaton());
    st.global_tba = sc.global.automaton();

    current = "products";
    st.locals.clear();
    for (std::size_t k = 0; k < sc.agents.size(); ++k) st.locals.push_back(local_product(st.wts[k], st.local_tba[k]));
    st.product = agent_product(st.locals);
    st.global = global_product(st.product, st.global_tba);
    ordered_json summary;
    summary["scenario"] = sc.name;
    summary["sizes"] = sizes_json(st);
    log << "products:\n";
    log_sizes(summary["sizes"], log);
    if (opts.dump_products) {
      for (const auto& l : st.locals)
        write_json_file(path_in(opts, "local_" + std::to_string(l.agent_id) + ".json"), local_to_json(l));
      write_json_file(path_in(opts, "agent_product.json"), product_to_json(st.product));
      write_json_file(path_in(opts, "global_product.json"), global_to_json(st.global));
    }
    const auto write_summary = [&] { write_json_file(path_in(opts, "summary.json"), summary); };

    current = "search";
    st.stats = {};
    std::optional<Error> search_error;
    try {
      st.run = find_accepting_run(st.global, &st.stats);
    } catch (const Error& e) {
      if (e.code() != Errc::NoAcceptingRun) throw;
      search_error = e;
    }
    if (opts.oracle) {
      st.oracle = {};
      if (st.global.size() > kOracleStateLimit) {
        st.oracle.note = "skipped: " + std::to_string(st.global.size()) + " states exceed the exhaustive limit";
      } else {
        try {
          st.oracle.feasible = oracle_search(st.global).has_value();
          st.oracle.ran = true;
        } catch (const Error& e) {
          st.oracle.note = std::string("inconclusive: ") + e.what();
        }
      }
    }
    ordered_json search;
    search["settled"] = st.stats.settled;
    search["rejected"] = st.stats.rejected;
    search["candidates"] = st.stats.candidates;
    search["replay_failures"] = st.stats.replay_failures;
    search["found"] = !search_error.has_value();
    if (!search_error) {
      search["prefix_length"] = st.run.loop_start;
      search["cycle_length"] = st.run.cycle_length();
      search["lasso_time"] = st.run.times.back();
    }
    summary["search"] = search;
    ordered_json oracle;
    oracle["enabled"] = opts.oracle;
    oracle["ran"] = st.oracle.ran;
    oracle["feasible"] = st.oracle.feasible;
    oracle["disagrees"] = st.oracle.ran && st.oracle.feasible == search_error.has_value();
    oracle["note"] = st.oracle.note;
    summary["oracle"] = oracle;
    if (search_error) {
      write_summary();
      if (st.oracle.ran && st.oracle.feasible)
        log << "warning: exhaustive search found a run the clock-aware Dijkstra missed (false negative)\n";
      throw *search_error;
    }
    log << "search: lasso with prefix " << st.run.loop_start << " and cycle " << st.run.cycle_length()
        << " steps\n";

    current = "project";
    double horizon = sc.global.horizon();
    for (const auto& t : sc.local) horizon = std::max(horizon, t.horizon());
    st.plan = project(st.run, st.global, st.product, st.locals, st.wts, 2.0 * horizon);

    current = "verify";
    st.verify = verify_plan(st.plan, local_checks(sc), global_check(sc));
    write_json_file(path_in(opts, "plan.json"), plan_to_json(st.plan, st.global, st.verify));
    ordered_json ver = ordered_json::array();
    for (const auto& v : st.verify.verdicts) {
      ver.push_back({{"name", v.name}, {"formula", v.formula}, {"pass", v.pass}});
      log << "verify " << v.name << ": " << (v.pass ? "pass" : "FAIL") << "  " << v.formula << '\n';
    }
    summary["verification"] = ver;
    write_summary();

    if (stage != Stage::Plan) {
      current = "simulate";
      SimOptions so;
      so.h = sc.h;
      so.margin = sc.margin;
      st.trajectory = simulate(st.plan, sc.agents, st.wts, so);
      for (std::size_t k = 0; k < sc.agents.size(); ++k)
        write_trajectory_csv(path_in(opts, "trajectory_" + std::to_string(sc.agents[k].id) + ".csv"),
                             st.trajectory.samples[k]);
      write_crossings_csv(path_in(opts, "crossings.csv"), st.trajectory.crossings);
      write_svg(path_in(opts, "paths.svg"), st.partition, st.trajectory);
      log << "simulate: " << st.trajectory.crossings.size() << " crossings, all within their bounds\n";
    }
    if (stage == Stage::All) {
      current = "report";
      const std::string text = report(opts.out_dir);
      write_text(path_in(opts, "report.txt"), text);
      log << text;
    }
    return st.verify.all_pass() ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    log << "error [" << current << "] " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    log << "error [" << current << "] SchemaError: " << e.what() << '\n';
    return kExitInput;
  }
}

int run_check(const std::string& scenario_path, const PipelineOptions& opts, std::ostream& log) {
  try {
    Scenario sc = load_scenario(scenario_path);
    const Partition part = build_partition(sc.bounds, sc.cuts, sc.regions, sc.walls);
    const std::string path = path_in(opts, "plan.json");
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingArtifact, path);
    nlohmann::json pj;
    try {
      in >> pj;
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaError, path + ": " + e.what());
    }
    Plan plan;
    plan.check_until = pj.at("check_until").get<double>();
    for (const auto& c : pj.at("collective")) plan.times.push_back(c.at("time").get<double>());
    plan.collective_labels.assign(plan.times.size(), {});
    const auto& agents = pj.at("agents");
    if (agents.size() != sc.agents.size()) throw Error(Errc::SchemaError, "plan and scenario disagree on agents");
    for (const auto& aj : agents) {
      AgentSchedule a;
      a.agent_id = aj.at("agent").get<int>();
      a.cells = aj.at("cells").get<std::vector<int>>();
      if (a.cells.size() != plan.times.size()) throw Error(Errc::SchemaError, "plan cell list has wrong length");
      for (std::size_t j = 0; j < a.cells.size(); ++j) {
        const auto cell = static_cast<std::size_t>(a.cells[j]);
        if (cell >= part.size()) throw Error(Errc::SchemaError, "plan names unknown cell");
        a.labels.push_back(part.labels[cell]);
        for (const auto& p : part.labels[cell]) plan.collective_labels[j].insert(qualify(p, a.agent_id));
      }
      plan.agents.push_back(std::move(a));
    }
    const VerifyReport r = verify_plan(plan, local_checks(sc), global_check(sc));
    for (const auto& v : r.verdicts)
      log << v.name << ": " << (v.pass ? "pass" : "FAIL") << "  " << v.formula << '\n';
    return r.all_pass() ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    log << "error [check] " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    log << "error [check] SchemaError: " << e.what() << '\n';
    return kExitInput;
  }
}

namespace {

nlohmann::json read_json_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifact, path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  return j;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingArtifact, path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    rows.push_back(std::move(cols));
  }
  return rows;
}

}  // namespace

std::string report(const std::string& out_dir) {
  const auto summary = read_json_artifact((fs::path(out_dir) / "summary.json").string());
  const auto rows = read_csv((fs::path(out_dir) / "crossings.csv").string());
  std::ostringstream os;
  os << "== " << summary.value("scenario", std::string("scenario")) << " ==\n\n";
  const auto& sz = summary.at("sizes");
  os << "State counts\n";
  os << std::left << std::setw(28) << "  layer" << std::setw(12) << "states" << "transitions\n";
  for (const auto& w : sz.at("wts"))
    os << std::setw(28) << ("  WTS agent " + w.at("agent").dump()) << std::setw(12) << w.at("states").dump()
       << w.at("transitions").dump() << '\n';
  for (const auto& l : sz.at("local"))
    os << std::setw(28) << ("  local BWTS agent " + l.at("agent").dump()) << std::setw(12)
       << l.at("states").dump() << l.at("transitions").dump() << "   (TBA " << l.at("tba_locations").dump()
       << " loc, " << l.at("clocks").dump() << " clk; " << l.at("unpruned_states").dump()
       << " before pruning)\n";
  os << std::setw(28) << "  agent product" << std::setw(12) << sz.at("agent_product").at("states").dump()
     << sz.at("agent_product").at("transitions").dump() << '\n';
  os << std::setw(28) << "  global BWTS" << std::setw(12) << sz.at("global").at("states").dump()
     << sz.at("global").at("transitions").dump() << '\n';
  os << "  state bound: " << sz.at("state_bound").get<std::string>() << "\n\n";

  const auto& se = summary.at("search");
  os << "Search: " << se.at("settled").dump() << " states settled, " << se.at("rejected").dump()
     << " relaxations rejected by clocks, " << se.at("candidates").dump() << " accepting candidates, "
     << se.at("replay_failures").dump() << " replay failures\n";
  if (se.at("found").get<bool>())
    os << "  lasso: prefix " << se.at("prefix_length").dump() << ", cycle " << se.at("cycle_length").dump()
       << ", time " << format_real(se.at("lasso_time").get<double>()) << '\n';
  const auto& orc = summary.at("oracle");
  if (orc.at("enabled").get<bool>()) {
    if (!orc.at("ran").get<bool>())
      os << "  exhaustive check " << orc.at("note").get<std::string>() << '\n';
    else if (orc.at("disagrees").get<bool>())
      os << "\n  !! WARNING: false negative. The exhaustive search found an accepting run\n"
            "  !! that the clock-aware Dijkstra rejected (lockstep/predecessor approximation).\n\n";
    else
      os << "  exhaustive check agrees (" << (orc.at("feasible").get<bool>() ? "feasible" : "infeasible") << ")\n";
  }
  os << '\n';

  os << "Transitions (worst-case estimate vs actual time)\n";
  os << "  " << std::setw(7) << "agent" << std::setw(6) << "step" << std::setw(12) << "transition"
     << std::setw(14) << "worst case" << std::setw(14) << "actual" << "ok\n";
  constexpr std::size_t kShown = 24;
  std::size_t bad = 0, shown = 0;
  for (const auto& r : rows) {
    if (r.size() < 8) continue;
    const double actual = std::stod(r[6]), bound = std::stod(r[7]);
    const bool ok = actual <= bound + 1e-6;
    bad += !ok;
    if (ok && shown >= kShown) continue;
    ++shown;
    std::ostringstream a, b;
    a << std::fixed << std::setprecision(6) << bound;
    b << std::fixed << std::setprecision(6) << actual;
    os << "  " << std::setw(7) << r[0] << std::setw(6) << r[1] << std::setw(12) << (r[2] + "->" + r[3])
       << std::setw(14) << a.str() << std::setw(14) << b.str() << (ok ? "yes" : "NO") << '\n';
  }
  if (shown < rows.size()) os << "  ... " << rows.size() - shown << " more rows in crossings.csv\n";
  os << "  " << rows.size() - bad << "/" << rows.size() << " crossings within the worst-case bound\n\n";

  os << "Formulas\n";
  if (summary.contains("verification"))
    for (const auto& v : summary.at("verification"))
      os << "  " << std::setw(10) << v.at("name").get<std::string>() << (v.at("pass").get<bool>() ? "pass  " : "FAIL  ")
         << v.at("formula").get<std::string>() << '\n';
  return os.str();
}

int run_report(const std::string& out_dir, std::ostream& out, std::ostream& log) {
  try {
    out << report(out_dir);
    return kExitOk;
  } catch (const Error& e) {
    log << "error [report] " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    log << "error [report] SchemaError: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace mitlsynth
