#pragma once

#include <span>
#include <string>
#include <vector>

#include "mitlsynth/json_out.hpp"
#include "mitlsynth/mitl.hpp"

namespace mitlsynth {

using mitl::PropSet;

enum class Rel { Lt, Le, Gt, Ge };

struct ClockAtom {
  int clock = 0;
  Rel rel = Rel::Le;
  double bound = 0.0;
  friend bool operator==(const ClockAtom&, const ClockAtom&) = default;
};

/// Conjunction of `x rel c` atoms; empty means true.
struct ClockConstraint {
  std::vector<ClockAtom> atoms;

  bool holds(std::span<const double> valuation) const;
  bool empty() const { return atoms.empty(); }
  /// Copy with every clock id shifted by `offset`.
  ClockConstraint shifted(int offset) const;
  void append(const ClockConstraint& other);
  double max_constant() const;
  friend bool operator==(const ClockConstraint&, const ClockConstraint&) = default;
};

/// Conjunction of literals over atomic propositions; a letter matches when
/// every positive literal is in it and no negative literal is.
struct LabelConstraint {
  PropSet pos;
  PropSet neg;

  bool matches(const PropSet& letter) const;
  bool consistent() const;
  LabelConstraint operator&(const LabelConstraint& other) const;
  PropSet alphabet() const;
  friend bool operator==(const LabelConstraint&, const LabelConstraint&) = default;
};

struct TbaLocation {
  std::string name;
  LabelConstraint label;
  ClockConstraint invariant;
  bool initial = false;
  bool accepting = false;
};

struct TbaEdge {
  int src = 0;
  int dst = 0;
  ClockConstraint guard;
  std::vector<int> resets;
};

/// Timed Büchi automaton with labelled locations. Reading the next letter
/// after a delay moves along an edge into a location whose label matches it.
/// The source invariant and the guard see the clocks after the delay, the
/// target invariant sees them after the edge's resets.
struct TBA {
  std::vector<TbaLocation> locations;
  int clocks = 0;
  std::vector<TbaEdge> edges;

  std::size_t size() const { return locations.size(); }
  PropSet alphabet() const;
  std::vector<std::vector<int>> out_edges() const;
  /// Throws DanglingReference on an out-of-range location or clock id.
  void validate() const;
  double max_constant() const;
};

/// Finite-word acceptance: some run reads the whole word and ends in an
/// accepting location (no pending obligation). Explores every
/// nondeterministic branch with exact clock values.
bool accepts(const TBA& tba, const mitl::TimedWord& word);

/// Prefix reading of an infinite word: some run stays alive over the whole
/// word and enters an accepting location at a stamp >= accept_after.
bool accepts_prefix(const TBA& tba, const mitl::TimedWord& word, double accept_after);

TBA tba_from_json(const nlohmann::json& j);
TBA load_tba(const std::string& path);
ordered_json tba_to_json(const TBA& tba);

/// Translates the supported bounded fragment into a TBA:
///   F[0,b] β,  G[0,b] β,  β1 U[0,b] β2,  β1 -> F[0,b] β2 (recurring),
///   a boolean β (checked at time 0), or a conjunction of two of these.
/// β are boolean formulas. Anything else raises UnsupportedFragment.
TBA compile(const mitl::Formula& f);

}  // namespace mitlsynth
