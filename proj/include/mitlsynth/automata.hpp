#pragma once

// Layered products: WTS x local TBA, the synchronous agent product, and the
// product with the global TBA that carries reset flags for the search.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/json_out.hpp"
#include "mitlsynth/tba.hpp"

namespace mitlsynth {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

struct LocalState {
  int cell = -1;
  int loc = -1;
};

struct LocalTransition {
  int src = -1;
  int dst = -1;
  int wts_edge = -1;
  int tba_edge = -1;
  double weight = 0.0;
};

/// WTS x TBA. A state (r, s) exists when the cell labels satisfy the
/// location label; a transition pairs a WTS move with a TBA edge.
struct LocalBWTS {
  int agent_id = 1;
  int clocks = 0;
  PropSet alphabet;  // every proposition the partition defines
  std::vector<LocalState> states;
  std::vector<int> initial;
  std::vector<char> accepting;
  std::vector<ClockConstraint> invariant;
  std::vector<PropSet> labels;  // cell labels
  std::vector<LocalTransition> transitions;
  std::vector<ClockConstraint> guard;      // per transition
  std::vector<std::vector<int>> resets;    // per transition
  std::vector<std::vector<int>> out;
  std::size_t unpruned_states = 0;

  std::size_t size() const { return states.size(); }
  /// Transitions on which clock k is reset.
  std::vector<int> reset_set(int k) const;
};

/// Throws AlphabetMismatch when the TBA mentions a proposition the partition
/// does not define, EmptyProduct when no initial pair matches.
LocalBWTS local_product(const WTS& wts, const TBA& tba, bool prune = true);

struct ProductTransition {
  int src = -1;
  int dst = -1;
  double weight = 0.0;
  ClockConstraint guard;   // over the flattened agent clocks
  std::uint64_t resets = 0;
  std::vector<int> parts;  // local transition per agent
};

/// Synchronous product of local BWTSs; all agents move at once and the step
/// takes as long as the slowest of them.
struct ProductBWTS {
  std::vector<int> clock_offset;  // per agent, into the flattened clocks
  int clocks = 0;
  std::vector<std::vector<int>> states;  // local state id per agent
  std::vector<int> initial;
  std::vector<char> accepting;
  std::vector<ClockConstraint> invariant;
  std::vector<PropSet> labels;  // agent-qualified: "p@k"
  PropSet alphabet;
  std::vector<ProductTransition> transitions;
  std::vector<std::vector<int>> out;

  std::size_t size() const { return states.size(); }
  std::size_t agents() const { return clock_offset.size(); }
};

/// Qualified proposition name used in global formulas.
std::string qualify(const std::string& prop, int agent_id);

ProductBWTS agent_product(const std::vector<LocalBWTS>& locals);

struct GlobalState {
  int q = -1;             // product state; -1 for hand-built instances
  int s = -1;             // global TBA location
  std::uint64_t z = 0;    // bit k: clock k was reset on the incoming transition
  int l = 1;
  int invariant = 0;      // index into GlobalBWTS::constraints
  bool initial = false;
  bool accepting = false;
};

struct GlobalEdge {
  int src = -1;
  int dst = -1;
  double weight = 0.0;
  int guard = 0;  // index into GlobalBWTS::constraints
};

/// Search graph. Clocks are flattened with the global TBA's clocks first,
/// followed by each agent's. Edges are stored grouped by source.
struct GlobalBWTS {
  int clocks = 0;
  std::vector<int> clock_offset;  // [0] global, [k] agent k
  std::vector<GlobalState> states;
  std::vector<ClockConstraint> constraints{ClockConstraint{}};
  std::vector<GlobalEdge> edges;
  std::vector<std::size_t> offsets;

  std::size_t size() const { return states.size(); }
  int intern(const ClockConstraint& cc);
  int add_state(GlobalState st);
  void add_edge(int src, int dst, double weight, const ClockConstraint& guard = {});
  /// Sorts edges by source (stable) and builds the offsets table.
  void finalize();
  std::span<const GlobalEdge> out(int s) const {
    return {edges.data() + offsets[static_cast<std::size_t>(s)],
            edges.data() + offsets[static_cast<std::size_t>(s) + 1]};
  }
  std::vector<int> initial() const;
  double max_constant() const;
};

/// Throws AlphabetMismatch when the global TBA uses atoms outside the
/// qualified product alphabet, EmptyProduct when no initial state matches.
GlobalBWTS global_product(const ProductBWTS& pb, const TBA& gtba);

/// Worst-case count of global states for the given layer sizes.
BigInt state_bound(const std::vector<BigInt>& wts_sizes, const std::vector<BigInt>& tba_sizes,
                   const std::vector<int>& clock_counts, const BigInt& gtba_size, int g_clock_count);

/// Same count when clock values are tracked as integers in [0, C_max].
BigInt x2_state_bound(const std::vector<BigInt>& wts_sizes, const std::vector<BigInt>& tba_sizes,
                      const std::vector<int>& clock_counts, const std::vector<BigInt>& c_max,
                      const BigInt& gtba_size, int g_clock_count, const BigInt& g_c_max);

/// prod (C_i+1)^M_i (C_G+1)^M_G / 2^(sum M_i + M_G), exact.
BigRational savings_ratio(const std::vector<int>& clock_counts, const std::vector<BigInt>& c_max,
                          int g_clock_count, const BigInt& g_c_max);

ordered_json local_to_json(const LocalBWTS& p);
ordered_json product_to_json(const ProductBWTS& p);
ordered_json global_to_json(const GlobalBWTS& g);

}  // namespace mitlsynth
