#include "mitlsynth/automata.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <tuple>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

std::vector<int> LocalBWTS::reset_set(int k) const {
  std::vector<int> out_ids;
  for (std::size_t t = 0; t < transitions.size(); ++t)
    if (std::find(resets[t].begin(), resets[t].end(), k) != resets[t].end())
      out_ids.push_back(static_cast<int>(t));
  return out_ids;
}

namespace {

void check_alphabet(const PropSet& used, const PropSet& defined, const std::string& what) {
  for (const auto& p : used)
    if (!defined.count(p)) throw Error(Errc::AlphabetMismatch, what + " uses undefined proposition '" + p + "'");
}

std::uint64_t clock_bits(const std::vector<int>& clocks, int offset) {
  std::uint64_t m = 0;
  for (int c : clocks) m |= std::uint64_t{1} << (c + offset);
  return m;
}

const std::vector<double>& zeros(int n) {
  static thread_local std::vector<double> z;
  z.assign(static_cast<std::size_t>(n), 0.0);
  return z;
}

}  // namespace

LocalBWTS local_product(const WTS& wts, const TBA& tba, bool prune) {
  check_alphabet(tba.alphabet(), wts.propositions, "local TBA of agent " + std::to_string(wts.agent_id));
  const auto nloc = tba.size();
  std::vector<int> id(wts.size() * nloc, -1);
  LocalBWTS full;
  full.agent_id = wts.agent_id;
  full.clocks = tba.clocks;
  full.alphabet = wts.propositions;
  for (std::size_t r = 0; r < wts.size(); ++r)
    for (std::size_t s = 0; s < nloc; ++s)
      if (tba.locations[s].label.matches(wts.labels[r])) {
        id[r * nloc + s] = static_cast<int>(full.states.size());
        full.states.push_back({static_cast<int>(r), static_cast<int>(s)});
        full.accepting.push_back(tba.locations[s].accepting ? 1 : 0);
        full.invariant.push_back(tba.locations[s].invariant);
        full.labels.push_back(wts.labels[r]);
      }
  for (int r : wts.initial)
    for (std::size_t s = 0; s < nloc; ++s) {
      const int q = id[static_cast<std::size_t>(r) * nloc + s];
      if (q >= 0 && tba.locations[s].initial && tba.locations[s].invariant.holds(zeros(tba.clocks)))
        full.initial.push_back(q);
    }
  std::sort(full.initial.begin(), full.initial.end());
  if (full.initial.empty())
    throw Error(Errc::EmptyProduct, "agent " + std::to_string(wts.agent_id) +
                                        ": no initial TBA location matches the initial cell labels");

  const auto tba_out = tba.out_edges();
  full.out.assign(full.states.size(), {});
  for (std::size_t q = 0; q < full.states.size(); ++q) {
    const auto [r, s] = full.states[q];
    for (int wt : wts.out[static_cast<std::size_t>(r)]) {
      const auto& w = wts.transitions[static_cast<std::size_t>(wt)];
      for (int te : tba_out[static_cast<std::size_t>(s)]) {
        const auto& e = tba.edges[static_cast<std::size_t>(te)];
        const int dst = id[static_cast<std::size_t>(w.dst) * nloc + static_cast<std::size_t>(e.dst)];
        if (dst < 0) continue;
        full.out[q].push_back(static_cast<int>(full.transitions.size()));
        full.transitions.push_back({static_cast<int>(q), dst, wt, te, w.weight});
        full.guard.push_back(e.guard);
        full.resets.push_back(e.resets);
      }
    }
  }
  full.unpruned_states = full.states.size();
  if (!prune) return full;

  std::vector<char> seen(full.size(), 0);
  std::deque<int> queue(full.initial.begin(), full.initial.end());
  for (int q : full.initial) seen[static_cast<std::size_t>(q)] = 1;
  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    for (int t : full.out[static_cast<std::size_t>(q)]) {
      const int d = full.transitions[static_cast<std::size_t>(t)].dst;
      if (!seen[static_cast<std::size_t>(d)]) {
        seen[static_cast<std::size_t>(d)] = 1;
        queue.push_back(d);
      }
    }
  }
  LocalBWTS out;
  out.agent_id = full.agent_id;
  out.clocks = full.clocks;
  out.alphabet = full.alphabet;
  out.unpruned_states = full.unpruned_states;
  std::vector<int> remap(full.size(), -1);
  for (std::size_t q = 0; q < full.size(); ++q)
    if (seen[q]) {
      remap[q] = static_cast<int>(out.states.size());
      out.states.push_back(full.states[q]);
      out.accepting.push_back(full.accepting[q]);
      out.invariant.push_back(full.invariant[q]);
      out.labels.push_back(full.labels[q]);
    }
  for (int q : full.initial) out.initial.push_back(remap[static_cast<std::size_t>(q)]);
  out.out.assign(out.states.size(), {});
  for (std::size_t t = 0; t < full.transitions.size(); ++t) {
    auto tr = full.transitions[t];
    if (!seen[static_cast<std::size_t>(tr.src)]) continue;
    tr.src = remap[static_cast<std::size_t>(tr.src)];
    tr.dst = remap[static_cast<std::size_t>(tr.dst)];
    out.out[static_cast<std::size_t>(tr.src)].push_back(static_cast<int>(out.transitions.size()));
    out.transitions.push_back(tr);
    out.guard.push_back(full.guard[t]);
    out.resets.push_back(full.resets[t]);
  }
  return out;
}

std::string qualify(const std::string& prop, int agent_id) { return prop + "@" + std::to_string(agent_id); }

ProductBWTS agent_product(const std::vector<LocalBWTS>& locals) {
  if (locals.empty()) throw Error(Errc::EmptyProduct, "agent product of zero systems");
  ProductBWTS pb;
  const std::size_t n = locals.size();
  for (const auto& lp : locals) {
    pb.clock_offset.push_back(pb.clocks);
    pb.clocks += lp.clocks;
    for (const auto& p : lp.alphabet) pb.alphabet.insert(qualify(p, lp.agent_id));
  }
  if (pb.clocks > 63) throw Error(Errc::UnsupportedFragment, "more than 63 agent clocks");

  std::map<std::vector<int>, int> index;
  std::deque<int> queue;
  auto intern = [&](const std::vector<int>& tuple) {
    auto [it, fresh] = index.try_emplace(tuple, static_cast<int>(pb.states.size()));
    if (fresh) {
      pb.states.push_back(tuple);
      bool acc = true;
      ClockConstraint inv;
      PropSet lab;
      for (std::size_t k = 0; k < n; ++k) {
        const auto& lp = locals[k];
        const auto q = static_cast<std::size_t>(tuple[k]);
        acc = acc && lp.accepting[q];
        inv.append(lp.invariant[q].shifted(pb.clock_offset[k]));
        for (const auto& p : lp.labels[q]) lab.insert(qualify(p, lp.agent_id));
      }
      pb.accepting.push_back(acc ? 1 : 0);
      pb.invariant.push_back(std::move(inv));
      pb.labels.push_back(std::move(lab));
      pb.out.emplace_back();
      queue.push_back(it->second);
    }
    return it->second;
  };

  // Initial tuples in lexicographic order.
  std::vector<std::size_t> pick(n, 0);
  for (;;) {
    std::vector<int> tuple(n);
    for (std::size_t k = 0; k < n; ++k) tuple[k] = locals[k].initial[pick[k]];
    pb.initial.push_back(intern(tuple));
    std::size_t k = n;
    while (k > 0 && ++pick[k - 1] == locals[k - 1].initial.size()) pick[--k] = 0;
    if (k == 0) break;
  }

  while (!queue.empty()) {
    const int q = queue.front();
    queue.pop_front();
    const std::vector<int> src = pb.states[static_cast<std::size_t>(q)];
    std::vector<const std::vector<int>*> outs(n);
    bool stuck = false;
    for (std::size_t k = 0; k < n; ++k) {
      outs[k] = &locals[k].out[static_cast<std::size_t>(src[k])];
      stuck = stuck || outs[k]->empty();
    }
    if (stuck) continue;
    std::fill(pick.begin(), pick.end(), 0);
    for (;;) {
      ProductTransition tr;
      tr.src = q;
      std::vector<int> dst(n);
      for (std::size_t k = 0; k < n; ++k) {
        const int t = (*outs[k])[pick[k]];
        const auto& lt = locals[k].transitions[static_cast<std::size_t>(t)];
        dst[k] = lt.dst;
        tr.weight = std::max(tr.weight, lt.weight);
        tr.guard.append(locals[k].guard[static_cast<std::size_t>(t)].shifted(pb.clock_offset[k]));
        tr.resets |= clock_bits(locals[k].resets[static_cast<std::size_t>(t)], pb.clock_offset[k]);
        tr.parts.push_back(t);
      }
      tr.dst = intern(dst);
      pb.out[static_cast<std::size_t>(q)].push_back(static_cast<int>(pb.transitions.size()));
      pb.transitions.push_back(std::move(tr));
      std::size_t k = n;
      while (k > 0 && ++pick[k - 1] == outs[k - 1]->size()) pick[--k] = 0;
      if (k == 0) break;
    }
  }
  return pb;
}

int GlobalBWTS::intern(const ClockConstraint& cc) {
  if (cc.empty()) return 0;
  const auto it = std::find(constraints.begin(), constraints.end(), cc);
  if (it != constraints.end()) return static_cast<int>(it - constraints.begin());
  constraints.push_back(cc);
  return static_cast<int>(constraints.size()) - 1;
}

int GlobalBWTS::add_state(GlobalState st) {
  states.push_back(st);
  return static_cast<int>(states.size()) - 1;
}

void GlobalBWTS::add_edge(int src, int dst, double weight, const ClockConstraint& guard) {
  edges.push_back({src, dst, weight, intern(guard)});
}

void GlobalBWTS::finalize() {
  std::stable_sort(edges.begin(), edges.end(),
                   [](const GlobalEdge& a, const GlobalEdge& b) { return a.src < b.src; });
  offsets.assign(states.size() + 1, 0);
  for (const auto& e : edges) ++offsets[static_cast<std::size_t>(e.src) + 1];
  for (std::size_t s = 0; s < states.size(); ++s) offsets[s + 1] += offsets[s];
}

std::vector<int> GlobalBWTS::initial() const {
  std::vector<int> out_ids;
  for (std::size_t s = 0; s < states.size(); ++s)
    if (states[s].initial) out_ids.push_back(static_cast<int>(s));
  return out_ids;
}

double GlobalBWTS::max_constant() const {
  double m = 0.0;
  for (const auto& c : constraints) m = std::max(m, c.max_constant());
  return m;
}

GlobalBWTS global_product(const ProductBWTS& pb, const TBA& gtba) {
  check_alphabet(gtba.alphabet(), pb.alphabet, "global TBA");
  const int mg = gtba.clocks;
  if (mg + pb.clocks > 64) throw Error(Errc::UnsupportedFragment, "more than 64 clocks in total");

  GlobalBWTS g;
  g.clocks = mg + pb.clocks;
  g.clock_offset.push_back(0);
  for (int off : pb.clock_offset) g.clock_offset.push_back(off + mg);
  const std::uint64_t all = g.clocks == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << g.clocks) - 1;

  using Key = std::tuple<int, int, std::uint64_t, int>;
  std::map<Key, int> index;
  // Invariants depend only on (q, s); cache their ids.
  std::map<std::pair<int, int>, int> inv_ids;
  std::deque<int> queue;
  auto intern_state = [&](int q, int s, std::uint64_t z, int l, bool initial) {
    auto [it, fresh] = index.try_emplace(Key{q, s, z, l}, static_cast<int>(g.states.size()));
    if (fresh) {
      auto [iv, new_inv] = inv_ids.try_emplace({q, s}, 0);
      if (new_inv) {
        ClockConstraint inv = gtba.locations[static_cast<std::size_t>(s)].invariant;
        inv.append(pb.invariant[static_cast<std::size_t>(q)].shifted(mg));
        iv->second = g.intern(inv);
      }
      GlobalState st;
      st.q = q;
      st.s = s;
      st.z = z;
      st.l = l;
      st.invariant = iv->second;
      st.initial = initial;
      st.accepting = l == 1 && pb.accepting[static_cast<std::size_t>(q)];
      g.states.push_back(st);
      queue.push_back(it->second);
    }
    return it->second;
  };

  for (int q : pb.initial)
    for (std::size_t s = 0; s < gtba.size(); ++s) {
      const auto& loc = gtba.locations[s];
      if (loc.initial && loc.label.matches(pb.labels[static_cast<std::size_t>(q)]) &&
          loc.invariant.holds(zeros(mg)))
        intern_state(q, static_cast<int>(s), all, 1, true);
    }
  if (g.states.empty())
    throw Error(Errc::EmptyProduct, "no initial global TBA location matches the initial labels");

  const auto tba_out = gtba.out_edges();
  std::map<std::pair<int, int>, int> guard_ids;  // (product transition, TBA edge)
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    const GlobalState st = g.states[static_cast<std::size_t>(u)];
    const bool in_f = pb.accepting[static_cast<std::size_t>(st.q)];
    const bool in_fg = gtba.locations[static_cast<std::size_t>(st.s)].accepting;
    int l2 = st.l;
    if (st.l == 1 && in_f) l2 = 2;
    else if (st.l == 2 && in_fg) l2 = 1;
    for (int t : pb.out[static_cast<std::size_t>(st.q)]) {
      const auto& tr = pb.transitions[static_cast<std::size_t>(t)];
      for (int e : tba_out[static_cast<std::size_t>(st.s)]) {
        const auto& edge = gtba.edges[static_cast<std::size_t>(e)];
        if (!gtba.locations[static_cast<std::size_t>(edge.dst)].label.matches(
                pb.labels[static_cast<std::size_t>(tr.dst)]))
          continue;
        const std::uint64_t z = clock_bits(edge.resets, 0) | (tr.resets << mg);
        const int v = intern_state(tr.dst, edge.dst, z, l2, false);
        int guard = 0;
        if (!edge.guard.empty() || !tr.guard.empty()) {
          auto [gi, fresh] = guard_ids.try_emplace({t, e}, 0);
          if (fresh) {
            ClockConstraint cc = edge.guard;
            cc.append(tr.guard.shifted(mg));
            gi->second = g.intern(cc);
          }
          guard = gi->second;
        }
        g.edges.push_back({u, v, tr.weight, guard});
      }
    }
  }
  g.finalize();
  return g;
}

BigInt state_bound(const std::vector<BigInt>& wts_sizes, const std::vector<BigInt>& tba_sizes,
                   const std::vector<int>& clock_counts, const BigInt& gtba_size, int g_clock_count) {
  BigInt total = 1;
  for (std::size_t i = 0; i < wts_sizes.size(); ++i)
    total *= wts_sizes[i] * tba_sizes[i] * (BigInt{1} << clock_counts[i]);
  return total * gtba_size * (BigInt{1} << g_clock_count) * 2;
}

BigInt x2_state_bound(const std::vector<BigInt>& wts_sizes, const std::vector<BigInt>& tba_sizes,
                      const std::vector<int>& clock_counts, const std::vector<BigInt>& c_max,
                      const BigInt& gtba_size, int g_clock_count, const BigInt& g_c_max) {
  BigInt total = 1;
  for (std::size_t i = 0; i < wts_sizes.size(); ++i)
    total *= wts_sizes[i] * tba_sizes[i] * boost::multiprecision::pow(c_max[i] + 1, clock_counts[i]);
  return total * gtba_size * 2 * boost::multiprecision::pow(g_c_max + 1, g_clock_count) * 2;
}

BigRational savings_ratio(const std::vector<int>& clock_counts, const std::vector<BigInt>& c_max,
                          int g_clock_count, const BigInt& g_c_max) {
  BigInt num = boost::multiprecision::pow(g_c_max + 1, g_clock_count);
  int total_clocks = g_clock_count;
  for (std::size_t i = 0; i < clock_counts.size(); ++i) {
    num *= boost::multiprecision::pow(c_max[i] + 1, clock_counts[i]);
    total_clocks += clock_counts[i];
  }
  return BigRational(num, BigInt{1} << total_clocks);
}

namespace {

ordered_json cc_list(const ClockConstraint& cc) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : cc.atoms) {
    static const char* rel[] = {"<", "<=", ">", ">="};
    arr.push_back(ordered_json::array({a.clock, rel[static_cast<int>(a.rel)], a.bound}));
  }
  return arr;
}

}  // namespace

ordered_json local_to_json(const LocalBWTS& p) {
  ordered_json j;
  j["agent"] = p.agent_id;
  j["clocks"] = p.clocks;
  ordered_json st = ordered_json::array();
  for (std::size_t q = 0; q < p.size(); ++q)
    st.push_back({{"id", q},
                  {"cell", p.states[q].cell},
                  {"loc", p.states[q].loc},
                  {"accepting", p.accepting[q] != 0},
                  {"invariant", cc_list(p.invariant[q])}});
  j["states"] = std::move(st);
  j["initial"] = p.initial;
  ordered_json tr = ordered_json::array();
  for (std::size_t t = 0; t < p.transitions.size(); ++t) {
    const auto& x = p.transitions[t];
    tr.push_back({{"src", x.src},
                  {"dst", x.dst},
                  {"weight", x.weight},
                  {"guard", cc_list(p.guard[t])},
                  {"resets", p.resets[t]}});
  }
  j["transitions"] = std::move(tr);
  return j;
}

ordered_json product_to_json(const ProductBWTS& p) {
  ordered_json j;
  j["clocks"] = p.clocks;
  ordered_json st = ordered_json::array();
  for (std::size_t q = 0; q < p.size(); ++q)
    st.push_back({{"id", q}, {"locals", p.states[q]}, {"accepting", p.accepting[q] != 0}});
  j["states"] = std::move(st);
  j["initial"] = p.initial;
  ordered_json tr = ordered_json::array();
  for (const auto& x : p.transitions)
    tr.push_back({{"src", x.src}, {"dst", x.dst}, {"weight", x.weight}, {"resets", x.resets}});
  j["transitions"] = std::move(tr);
  return j;
}

ordered_json global_to_json(const GlobalBWTS& g) {
  ordered_json j;
  j["clocks"] = g.clocks;
  ordered_json st = ordered_json::array();
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto& x = g.states[s];
    st.push_back({{"id", s},
                  {"q", x.q},
                  {"s", x.s},
                  {"z", x.z},
                  {"l", x.l},
                  {"initial", x.initial},
                  {"accepting", x.accepting},
                  {"invariant", x.invariant}});
  }
  j["states"] = std::move(st);
  ordered_json cs = ordered_json::array();
  for (const auto& c : g.constraints) cs.push_back(cc_list(c));
  j["constraints"] = std::move(cs);
  ordered_json tr = ordered_json::array();
  for (const auto& e : g.edges)
    tr.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}, {"guard", e.guard}});
  j["transitions"] = std::move(tr);
  return j;
}

}  // namespace mitlsynth
