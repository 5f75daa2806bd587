#pragma once

#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mitlsynth::mitl {

using PropSet = std::set<std::string>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class Op { True, Atom, Not, And, Or, Implies, Until, Eventually, Always };

/// MITL abstract syntax. Timed operators carry a bounded interval [lo, hi].
struct Formula {
  Op op = Op::True;
  std::string atom;
  std::vector<Formula> kids;
  Interval iv;

  friend bool operator==(const Formula&, const Formula&) = default;

  static Formula top() { return {}; }
  static Formula ap(std::string name) { return {Op::Atom, std::move(name), {}, {}}; }
  static Formula neg(Formula f) { return {Op::Not, {}, {std::move(f)}, {}}; }
  static Formula conj(Formula l, Formula r) { return {Op::And, {}, {std::move(l), std::move(r)}, {}}; }
  static Formula disj(Formula l, Formula r) { return {Op::Or, {}, {std::move(l), std::move(r)}, {}}; }
  static Formula implies(Formula l, Formula r) {
    return {Op::Implies, {}, {std::move(l), std::move(r)}, {}};
  }
  static Formula until(Formula l, Formula r, Interval iv) {
    return {Op::Until, {}, {std::move(l), std::move(r)}, iv};
  }
  static Formula eventually(Formula f, Interval iv) { return {Op::Eventually, {}, {std::move(f)}, iv}; }
  static Formula always(Formula f, Interval iv) { return {Op::Always, {}, {std::move(f)}, iv}; }

  bool is_boolean() const;
  PropSet atoms() const;
  /// Largest finite interval bound appearing anywhere in the formula.
  double max_bound() const;
};

/// Grammar, loosest to tightest: `->` (right assoc), `|`, `&`, `U[a,b]`
/// (right assoc), then prefix `!`, `F[a,b]`, `G[a,b]`. `F b` and `G b`
/// abbreviate `[0,b]`. Atoms are identifiers that may contain `@` and `.`;
/// `true` / `false` are constants.
Formula parse(std::string_view text);

/// Prints a form that parses back to the same tree.
std::string to_string(const Formula& f);

struct Letter {
  PropSet props;
  double time = 0.0;
};

using TimedWord = std::vector<Letter>;

/// First stamp 0, strictly increasing.
bool well_formed(const TimedWord& word);

/// Pointwise satisfaction at position i of a finite word. The left side of
/// Until must hold before the witness, not at it. Until is strong:
/// with no witness inside the word it is false, whatever the deadline.
bool evaluate(const TimedWord& word, const Formula& f, std::size_t i = 0);

/// Top-level conjuncts of the form `b1 -> F[0,b] b2` (boolean b1, b2).
bool is_response(const Formula& f);
std::vector<Formula> conjuncts(const Formula& f);

/// Satisfaction of a task formula: response conjuncts are recurring
/// obligations checked at every position whose stamp is <= check_until,
/// every other conjunct is checked at position 0.
bool holds(const TimedWord& word, const Formula& f,
           double check_until = std::numeric_limits<double>::infinity());

}  // namespace mitlsynth::mitl
