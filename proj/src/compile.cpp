// Pattern compiler for the bounded MITL fragment used in task formulas.

#include <algorithm>
#include <optional>
#include <set>

#include "mitlsynth/error.hpp"
#include "mitlsynth/tba.hpp"

namespace mitlsynth {

using mitl::Formula;
using mitl::Op;

namespace {

using Clauses = std::vector<LabelConstraint>;

bool subsumes(const LabelConstraint& a, const LabelConstraint& b) {
  return std::includes(b.pos.begin(), b.pos.end(), a.pos.begin(), a.pos.end()) &&
         std::includes(b.neg.begin(), b.neg.end(), a.neg.begin(), a.neg.end());
}

Clauses simplify(Clauses in) {
  Clauses out;
  for (auto& c : in) {
    if (!c.consistent()) continue;
    if (std::find(out.begin(), out.end(), c) != out.end()) continue;
    out.push_back(std::move(c));
  }
  Clauses kept;
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool redundant = false;
    for (std::size_t j = 0; j < out.size() && !redundant; ++j)
      if (i != j && subsumes(out[j], out[i]) && !(out[i] == out[j])) redundant = true;
    if (!redundant) kept.push_back(out[i]);
  }
  return kept;
}

Clauses cross(const Clauses& l, const Clauses& r) {
  Clauses out;
  for (const auto& a : l)
    for (const auto& b : r) out.push_back(a & b);
  return simplify(std::move(out));
}

Clauses concat(Clauses l, const Clauses& r) {
  l.insert(l.end(), r.begin(), r.end());
  return simplify(std::move(l));
}

// Disjunctive normal form of f (positive) or of !f (negative).
Clauses dnf(const Formula& f, bool positive) {
  switch (f.op) {
    case Op::True: return positive ? Clauses{LabelConstraint{}} : Clauses{};
    case Op::Atom: {
      LabelConstraint c;
      (positive ? c.pos : c.neg).insert(f.atom);
      return {c};
    }
    case Op::Not: return dnf(f.kids[0], !positive);
    case Op::And:
      return positive ? cross(dnf(f.kids[0], true), dnf(f.kids[1], true))
                      : concat(dnf(f.kids[0], false), dnf(f.kids[1], false));
    case Op::Or:
      return positive ? concat(dnf(f.kids[0], true), dnf(f.kids[1], true))
                      : cross(dnf(f.kids[0], false), dnf(f.kids[1], false));
    case Op::Implies:
      return positive ? concat(dnf(f.kids[0], false), dnf(f.kids[1], true))
                      : cross(dnf(f.kids[0], true), dnf(f.kids[1], false));
    default:
      throw Error(Errc::UnsupportedFragment, "temporal operator inside a state formula");
  }
}

// Abstract automaton whose locations carry a DNF label; expanded into one
// concrete location per clause.
struct ProtoLocation {
  std::string name;
  Clauses label;
  ClockConstraint invariant;
  bool initial = false;
  bool accepting = false;
};

struct ProtoEdge {
  int src, dst;
  ClockConstraint guard;
  std::vector<int> resets;
};

struct Proto {
  std::vector<ProtoLocation> locs;
  std::vector<ProtoEdge> edges;
  int clocks = 0;

  int add(ProtoLocation l) {
    locs.push_back(std::move(l));
    return static_cast<int>(locs.size()) - 1;
  }
  void edge(int s, int d, ClockConstraint g = {}, std::vector<int> r = {}) {
    edges.push_back({s, d, std::move(g), std::move(r)});
  }

  TBA expand() const {
    TBA tba;
    tba.clocks = clocks;
    std::vector<std::vector<int>> copies(locs.size());
    for (std::size_t i = 0; i < locs.size(); ++i) {
      for (std::size_t c = 0; c < locs[i].label.size(); ++c) {
        TbaLocation l;
        l.name = locs[i].label.size() > 1 ? locs[i].name + "#" + std::to_string(c) : locs[i].name;
        l.label = locs[i].label[c];
        l.invariant = locs[i].invariant;
        l.initial = locs[i].initial;
        l.accepting = locs[i].accepting;
        copies[i].push_back(static_cast<int>(tba.locations.size()));
        tba.locations.push_back(std::move(l));
      }
    }
    for (const auto& e : edges)
      for (int s : copies[static_cast<std::size_t>(e.src)])
        for (int d : copies[static_cast<std::size_t>(e.dst)]) tba.edges.push_back({s, d, e.guard, e.resets});
    return tba;
  }
};

ClockConstraint le(double b) { return {{{0, Rel::Le, b}}}; }
ClockConstraint gt(double b) { return {{{0, Rel::Gt, b}}}; }

[[noreturn]] void unsupported(const Formula& f, const std::string& why) {
  throw Error(Errc::UnsupportedFragment, mitl::to_string(f) + ": " + why);
}

void require_zero_start(const Formula& f) {
  if (f.iv.lo != 0.0) unsupported(f, "only intervals of the form [0,b] are supported");
}

const Clauses kAny{LabelConstraint{}};

TBA compile_pattern(const Formula& f) {
  Proto p;
  if (f.is_boolean()) {
    // Holds at the first position only.
    const int now = p.add({"now", dnf(f, true), {}, true, true});
    const int any = p.add({"any", kAny, {}, false, true});
    p.edge(now, any);
    p.edge(any, any);
    return p.expand();
  }
  p.clocks = 1;
  if (f.op == Op::Eventually && f.kids[0].is_boolean()) {
    require_zero_start(f);
    const double b = f.iv.hi;
    const int wait = p.add({"wait", kAny, le(b), true, false});
    const int hit = p.add({"hit", dnf(f.kids[0], true), {}, true, true});
    const int done = p.add({"done", kAny, {}, false, true});
    p.edge(wait, wait);
    p.edge(wait, hit, le(b));
    p.edge(hit, done);
    p.edge(done, done);
    return p.expand();
  }
  if (f.op == Op::Always && f.kids[0].is_boolean()) {
    require_zero_start(f);
    const double b = f.iv.hi;
    const int in = p.add({"hold", dnf(f.kids[0], true), {}, true, true});
    const int out = p.add({"after", kAny, {}, false, true});
    p.edge(in, in, le(b));
    p.edge(in, out, gt(b));
    p.edge(out, out);
    return p.expand();
  }
  if (f.op == Op::Until && f.kids[0].is_boolean() && f.kids[1].is_boolean()) {
    require_zero_start(f);
    const double b = f.iv.hi;
    const int wait = p.add({"wait", dnf(f.kids[0], true), le(b), true, false});
    const int hit = p.add({"hit", dnf(f.kids[1], true), {}, true, true});
    const int done = p.add({"done", kAny, {}, false, true});
    p.edge(wait, wait);
    p.edge(wait, hit, le(b));
    p.edge(hit, done);
    p.edge(done, done);
    return p.expand();
  }
  if (mitl::is_response(f)) {
    const Formula& trigger = f.kids[0];
    const Formula& goal = f.kids[1].kids[0];
    const double b = f.kids[1].iv.hi;
    // Pending is entered with a clock reset on any letter; entering it on a
    // non-trigger letter only adds an obligation, so the idle branch keeps
    // the language exact.
    const int idle = p.add({"idle", dnf(trigger, false), {}, true, true});
    const int met = p.add({"met", dnf(goal, true), {}, true, true});
    const int pending = p.add({"pending", dnf(goal, false), le(b), true, false});
    for (int from : {idle, met}) {
      p.edge(from, idle);
      p.edge(from, met);
      p.edge(from, pending, {}, {0});
    }
    p.edge(pending, pending);
    p.edge(pending, met, le(b));
    return p.expand();
  }
  unsupported(f, "not one of the supported patterns");
}

// Accepting locations closed under successors: once accepting, always accepting.
TBA prune_unreachable(const TBA& in) {
  std::vector<char> seen(in.size(), 0);
  std::vector<int> stack;
  for (std::size_t s = 0; s < in.size(); ++s)
    if (in.locations[s].initial) {
      seen[s] = 1;
      stack.push_back(static_cast<int>(s));
    }
  const auto out = in.out_edges();
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (int e : out[static_cast<std::size_t>(s)]) {
      const auto d = static_cast<std::size_t>(in.edges[static_cast<std::size_t>(e)].dst);
      if (!seen[d]) {
        seen[d] = 1;
        stack.push_back(static_cast<int>(d));
      }
    }
  }
  TBA outt;
  outt.clocks = in.clocks;
  std::vector<int> remap(in.size(), -1);
  for (std::size_t s = 0; s < in.size(); ++s)
    if (seen[s]) {
      remap[s] = static_cast<int>(outt.locations.size());
      outt.locations.push_back(in.locations[s]);
    }
  for (const auto& e : in.edges) {
    const int s = remap[static_cast<std::size_t>(e.src)];
    const int d = remap[static_cast<std::size_t>(e.dst)];
    if (s >= 0 && d >= 0) outt.edges.push_back({s, d, e.guard, e.resets});
  }
  return outt;
}

// Synchronous product of two automata over disjoint clocks. A location
// accepts when both components do. This is exact for finite words; for
// infinite ones it asks both obligations to be discharged at the same letter
// infinitely often, which can only lose runs, never admit wrong ones.
TBA conjoin(const TBA& a, const TBA& b) {
  TBA out;
  out.clocks = a.clocks + b.clocks;
  const auto nb = b.size();
  std::vector<int> remap(a.size() * nb, -1);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < nb; ++j) {
      const auto& la = a.locations[i];
      const auto& lb = b.locations[j];
      TbaLocation loc;
      loc.label = la.label & lb.label;
      if (!loc.label.consistent()) continue;
      loc.name = la.name + "|" + lb.name;
      loc.invariant = la.invariant;
      loc.invariant.append(lb.invariant.shifted(a.clocks));
      loc.initial = la.initial && lb.initial;
      loc.accepting = la.accepting && lb.accepting;
      remap[i * nb + j] = static_cast<int>(out.locations.size());
      out.locations.push_back(std::move(loc));
    }
  for (const auto& ea : a.edges)
    for (const auto& eb : b.edges) {
      const int s = remap[static_cast<std::size_t>(ea.src) * nb + static_cast<std::size_t>(eb.src)];
      const int d = remap[static_cast<std::size_t>(ea.dst) * nb + static_cast<std::size_t>(eb.dst)];
      if (s < 0 || d < 0) continue;
      TbaEdge e{s, d, ea.guard, ea.resets};
      e.guard.append(eb.guard.shifted(a.clocks));
      for (int r : eb.resets) e.resets.push_back(r + a.clocks);
      out.edges.push_back(std::move(e));
    }
  return prune_unreachable(out);
}

}  // namespace

TBA compile(const Formula& f) {
  if (f.op == Op::True) {
    TBA t;
    t.locations.push_back({"true", {}, {}, true, true});
    t.edges.push_back({0, 0, {}, {}});
    return t;
  }
  // Boolean conjuncts are all checked at the first letter, so they form one
  // pattern.
  std::vector<Formula> parts;
  std::optional<Formula> now;
  for (auto& c : mitl::conjuncts(f)) {
    if (!c.is_boolean())
      parts.push_back(std::move(c));
    else
      now = now ? Formula::conj(std::move(*now), std::move(c)) : std::move(c);
  }
  if (now) parts.insert(parts.begin(), std::move(*now));
  if (parts.size() > 2) unsupported(f, "at most two conjoined patterns are supported");
  TBA out = prune_unreachable(compile_pattern(parts[0]));
  if (parts.size() == 2) out = conjoin(out, prune_unreachable(compile_pattern(parts[1])));
  out.validate();
  return out;
}

}  // namespace mitlsynth
