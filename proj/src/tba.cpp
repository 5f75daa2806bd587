#include "mitlsynth/tba.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

bool ClockConstraint::holds(std::span<const double> v) const {
  for (const auto& a : atoms) {
    const double x = v[static_cast<std::size_t>(a.clock)];
    switch (a.rel) {
      case Rel::Lt: if (!(x < a.bound)) return false; break;
      case Rel::Le: if (!(x <= a.bound)) return false; break;
      case Rel::Gt: if (!(x > a.bound)) return false; break;
      case Rel::Ge: if (!(x >= a.bound)) return false; break;
    }
  }
  return true;
}

ClockConstraint ClockConstraint::shifted(int offset) const {
  ClockConstraint out = *this;
  for (auto& a : out.atoms) a.clock += offset;
  return out;
}

void ClockConstraint::append(const ClockConstraint& other) {
  atoms.insert(atoms.end(), other.atoms.begin(), other.atoms.end());
}

double ClockConstraint::max_constant() const {
  double m = 0.0;
  for (const auto& a : atoms) m = std::max(m, a.bound);
  return m;
}

bool LabelConstraint::matches(const PropSet& letter) const {
  for (const auto& p : pos)
    if (!letter.count(p)) return false;
  for (const auto& p : neg)
    if (letter.count(p)) return false;
  return true;
}

bool LabelConstraint::consistent() const {
  return std::none_of(pos.begin(), pos.end(), [&](const std::string& p) { return neg.count(p) > 0; });
}

LabelConstraint LabelConstraint::operator&(const LabelConstraint& other) const {
  LabelConstraint out = *this;
  out.pos.insert(other.pos.begin(), other.pos.end());
  out.neg.insert(other.neg.begin(), other.neg.end());
  return out;
}

PropSet LabelConstraint::alphabet() const {
  PropSet out = pos;
  out.insert(neg.begin(), neg.end());
  return out;
}

PropSet TBA::alphabet() const {
  PropSet out;
  for (const auto& l : locations) {
    auto a = l.label.alphabet();
    out.insert(a.begin(), a.end());
  }
  return out;
}

std::vector<std::vector<int>> TBA::out_edges() const {
  std::vector<std::vector<int>> out(locations.size());
  for (std::size_t e = 0; e < edges.size(); ++e)
    out[static_cast<std::size_t>(edges[e].src)].push_back(static_cast<int>(e));
  return out;
}

void TBA::validate() const {
  auto check_cc = [&](const ClockConstraint& cc, const std::string& where) {
    for (const auto& a : cc.atoms)
      if (a.clock < 0 || a.clock >= clocks)
        throw Error(Errc::DanglingReference, where + " names clock " + std::to_string(a.clock) +
                                                 " of a " + std::to_string(clocks) + "-clock automaton");
  };
  if (clocks < 0) throw Error(Errc::SchemaError, "negative clock count");
  for (const auto& l : locations) check_cc(l.invariant, "invariant of '" + l.name + "'");
  const int n = static_cast<int>(locations.size());
  for (const auto& e : edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n)
      throw Error(Errc::DanglingReference, "edge names an unknown location");
    check_cc(e.guard, "edge guard");
    for (int r : e.resets)
      if (r < 0 || r >= clocks)
        throw Error(Errc::DanglingReference, "edge resets unknown clock " + std::to_string(r));
  }
}

double TBA::max_constant() const {
  double m = 0.0;
  for (const auto& l : locations) m = std::max(m, l.invariant.max_constant());
  for (const auto& e : edges) m = std::max(m, e.guard.max_constant());
  return m;
}

namespace {

// Configuration: location, the stamp at which each clock was last reset, and
// whether an accepting location was entered at a stamp >= `mark`.
struct Config {
  int loc;
  std::vector<double> reset_at;
  bool marked;
  auto operator<=>(const Config&) const = default;
};

std::set<Config> run_word(const TBA& tba, const mitl::TimedWord& word, double mark) {
  std::set<Config> current;
  if (word.empty()) return current;
  const auto out = tba.out_edges();
  const auto nclk = static_cast<std::size_t>(tba.clocks);
  const std::vector<double> zeros(nclk, 0.0);
  for (std::size_t s = 0; s < tba.size(); ++s) {
    const auto& loc = tba.locations[s];
    if (loc.initial && loc.label.matches(word[0].props) && loc.invariant.holds(zeros))
      current.insert({static_cast<int>(s), std::vector<double>(nclk, word[0].time),
                      loc.accepting && word[0].time >= mark});
  }
  std::vector<double> val(nclk);
  for (std::size_t j = 1; j < word.size() && !current.empty(); ++j) {
    const double now = word[j].time;
    std::set<Config> next;
    for (const auto& c : current) {
      for (std::size_t k = 0; k < nclk; ++k) val[k] = now - c.reset_at[k];
      if (!tba.locations[static_cast<std::size_t>(c.loc)].invariant.holds(val)) continue;
      for (int e : out[static_cast<std::size_t>(c.loc)]) {
        const auto& edge = tba.edges[static_cast<std::size_t>(e)];
        const auto& target = tba.locations[static_cast<std::size_t>(edge.dst)];
        if (!target.label.matches(word[j].props) || !edge.guard.holds(val)) continue;
        std::vector<double> resets = c.reset_at;
        std::vector<double> after = val;
        for (int r : edge.resets) {
          resets[static_cast<std::size_t>(r)] = now;
          after[static_cast<std::size_t>(r)] = 0.0;
        }
        if (!target.invariant.holds(after)) continue;
        next.insert({edge.dst, std::move(resets), c.marked || (target.accepting && now >= mark)});
      }
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace

bool accepts(const TBA& tba, const mitl::TimedWord& word) {
  const auto fin = run_word(tba, word, std::numeric_limits<double>::infinity());
  return std::any_of(fin.begin(), fin.end(), [&](const Config& c) {
    return tba.locations[static_cast<std::size_t>(c.loc)].accepting;
  });
}

bool accepts_prefix(const TBA& tba, const mitl::TimedWord& word, double accept_after) {
  const auto fin = run_word(tba, word, accept_after);
  return std::any_of(fin.begin(), fin.end(), [](const Config& c) { return c.marked; });
}

namespace {

Rel parse_rel(const std::string& s) {
  if (s == "<") return Rel::Lt;
  if (s == "<=") return Rel::Le;
  if (s == ">") return Rel::Gt;
  if (s == ">=") return Rel::Ge;
  throw Error(Errc::SchemaError, "unknown clock relation '" + s + "'");
}

const char* rel_str(Rel r) {
  switch (r) {
    case Rel::Lt: return "<";
    case Rel::Le: return "<=";
    case Rel::Gt: return ">";
    case Rel::Ge: return ">=";
  }
  return "?";
}

ClockConstraint parse_cc(const nlohmann::json& j) {
  ClockConstraint cc;
  if (j.is_null()) return cc;
  if (!j.is_array()) throw Error(Errc::SchemaError, "clock constraint must be an array");
  for (const auto& atom : j) {
    if (!atom.is_array() || atom.size() != 3 || !atom[0].is_number_integer() || !atom[1].is_string() ||
        !atom[2].is_number())
      throw Error(Errc::SchemaError, "clock atom must be [clock, rel, constant]");
    const double bound = atom[2].get<double>();
    if (bound < 0.0) throw Error(Errc::SchemaError, "clock constants must be nonnegative");
    cc.atoms.push_back({atom[0].get<int>(), parse_rel(atom[1].get<std::string>()), bound});
  }
  return cc;
}

ordered_json cc_json(const ClockConstraint& cc) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : cc.atoms) arr.push_back(ordered_json::array({a.clock, rel_str(a.rel), a.bound}));
  return arr;
}

std::string id_key(const nlohmann::json& id) {
  if (id.is_string()) return "s:" + id.get<std::string>();
  if (id.is_number_integer()) return "i:" + std::to_string(id.get<long>());
  throw Error(Errc::SchemaError, "location ids must be strings or integers");
}

}  // namespace

TBA tba_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("locations") || !j["locations"].is_array())
    throw Error(Errc::SchemaError, "TBA needs a 'locations' array");
  TBA tba;
  if (j.contains("clocks")) {
    if (!j["clocks"].is_number_integer()) throw Error(Errc::SchemaError, "'clocks' must be an integer");
    tba.clocks = j["clocks"].get<int>();
  }
  std::map<std::string, int> index;
  for (const auto& l : j["locations"]) {
    if (!l.is_object() || !l.contains("id")) throw Error(Errc::SchemaError, "location needs an 'id'");
    TbaLocation loc;
    const std::string key = id_key(l["id"]);
    loc.name = l["id"].is_string() ? l["id"].get<std::string>() : std::to_string(l["id"].get<long>());
    if (index.count(key)) throw Error(Errc::SchemaError, "duplicate location id " + loc.name);
    if (l.contains("labels")) {
      if (!l["labels"].is_array()) throw Error(Errc::SchemaError, "'labels' must be an array");
      for (const auto& lab : l["labels"]) {
        if (!lab.is_string()) throw Error(Errc::SchemaError, "labels must be strings");
        auto s = lab.get<std::string>();
        if (!s.empty() && s[0] == '!')
          loc.label.neg.insert(s.substr(1));
        else
          loc.label.pos.insert(s);
      }
    }
    if (l.contains("invariant")) loc.invariant = parse_cc(l["invariant"]);
    loc.accepting = l.value("accepting", false);
    loc.initial = l.value("initial", false);
    index[key] = static_cast<int>(tba.locations.size());
    tba.locations.push_back(std::move(loc));
  }
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) throw Error(Errc::SchemaError, "'edges' must be an array");
    for (const auto& e : j["edges"]) {
      if (!e.is_object() || !e.contains("src") || !e.contains("dst"))
        throw Error(Errc::SchemaError, "edge needs 'src' and 'dst'");
      auto find = [&](const nlohmann::json& id) {
        auto it = index.find(id_key(id));
        if (it == index.end()) throw Error(Errc::DanglingReference, "edge names unknown location " + id.dump());
        return it->second;
      };
      TbaEdge edge;
      edge.src = find(e["src"]);
      edge.dst = find(e["dst"]);
      if (e.contains("guard")) edge.guard = parse_cc(e["guard"]);
      if (e.contains("resets")) {
        if (!e["resets"].is_array()) throw Error(Errc::SchemaError, "'resets' must be an array");
        for (const auto& r : e["resets"]) {
          if (!r.is_number_integer()) throw Error(Errc::SchemaError, "resets must be clock indices");
          edge.resets.push_back(r.get<int>());
        }
      }
      tba.edges.push_back(std::move(edge));
    }
  }
  tba.validate();
  return tba;
}

TBA load_tba(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open TBA file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, path + ": " + e.what());
  }
  return tba_from_json(j);
}

ordered_json tba_to_json(const TBA& tba) {
  ordered_json j;
  ordered_json locs = ordered_json::array();
  for (std::size_t s = 0; s < tba.size(); ++s) {
    const auto& l = tba.locations[s];
    ordered_json lj;
    lj["id"] = s;
    lj["name"] = l.name;
    std::vector<std::string> labels(l.label.pos.begin(), l.label.pos.end());
    for (const auto& n : l.label.neg) labels.push_back("!" + n);
    lj["labels"] = labels;
    lj["invariant"] = cc_json(l.invariant);
    lj["accepting"] = l.accepting;
    lj["initial"] = l.initial;
    locs.push_back(std::move(lj));
  }
  j["locations"] = std::move(locs);
  j["clocks"] = tba.clocks;
  ordered_json edges = ordered_json::array();
  for (const auto& e : tba.edges) {
    ordered_json ej;
    ej["src"] = e.src;
    ej["dst"] = e.dst;
    ej["guard"] = cc_json(e.guard);
    ej["resets"] = e.resets;
    edges.push_back(std::move(ej));
  }
  j["edges"] = std::move(edges);
  return j;
}

}  // namespace mitlsynth
