#include "mitlsynth/mitl.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "mitlsynth/error.hpp"

namespace mitlsynth::mitl {

bool Formula::is_boolean() const {
  switch (op) {
    case Op::Until:
    case Op::Eventually:
    case Op::Always:
      return false;
    default:
      return std::all_of(kids.begin(), kids.end(), [](const Formula& k) { return k.is_boolean(); });
  }
}

PropSet Formula::atoms() const {
  PropSet out;
  if (op == Op::Atom) out.insert(atom);
  for (const auto& k : kids) {
    auto sub = k.atoms();
    out.insert(sub.begin(), sub.end());
  }
  return out;
}

double Formula::max_bound() const {
  double m = 0.0;
  if (op == Op::Until || op == Op::Eventually || op == Op::Always) m = iv.hi;
  for (const auto& k : kids) m = std::max(m, k.max_bound());
  return m;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Formula run() {
    Formula f = implication();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::SyntaxError, msg + " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    skip_ws();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '@' || c == '.';
  }

  // Peeks a whole identifier without consuming it.
  std::string_view peek_ident() {
    skip_ws();
    std::size_t end = pos_;
    if (end < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[end])) || s_[end] == '_')) {
      while (end < s_.size() && ident_char(s_[end])) ++end;
    }
    return s_.substr(pos_, end - pos_);
  }

  double number() {
    skip_ws();
    const std::string rest(s_.substr(pos_));
    char* endp = nullptr;
    const double v = std::strtod(rest.c_str(), &endp);
    if (endp == rest.c_str()) fail("expected a number");
    pos_ += static_cast<std::size_t>(endp - rest.c_str());
    if (!std::isfinite(v)) throw Error(Errc::IntervalError, "interval bounds must be finite");
    return v;
  }

  Interval interval() {
    skip_ws();
    const std::size_t at = pos_;
    Interval iv;
    if (eat("[")) {
      iv.lo = number();
      if (!eat(",")) fail("expected ',' in interval");
      iv.hi = number();
      if (!eat("]")) fail("expected ']' to close interval");
    } else {
      iv.lo = 0.0;
      iv.hi = number();
    }
    if (iv.lo < 0.0 || iv.lo > iv.hi)
      throw Error(Errc::IntervalError, "interval [" + std::to_string(iv.lo) + "," + std::to_string(iv.hi) +
                                           "] needs 0 <= a <= b (position " + std::to_string(at) + ")");
    return iv;
  }

  Formula implication() {
    Formula lhs = disjunction();
    if (eat("->")) return Formula::implies(std::move(lhs), implication());
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (eat("|")) lhs = Formula::disj(std::move(lhs), conjunction());
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = until();
    while (eat("&")) lhs = Formula::conj(std::move(lhs), until());
    return lhs;
  }

  Formula until() {
    Formula lhs = unary();
    if (peek_ident() == "U") {
      pos_ += 1;
      Interval iv = interval();
      return Formula::until(std::move(lhs), until(), iv);
    }
    return lhs;
  }

  Formula unary() {
    skip_ws();
    if (eat("!")) return Formula::neg(unary());
    if (eat("(")) {
      Formula f = implication();
      if (!eat(")")) fail("expected ')'");
      return f;
    }
    const std::string_view id = peek_ident();
    if (id.empty()) fail("expected a formula");
    if (id == "F" || id == "G") {
      pos_ += 1;
      Interval iv = interval();
      Formula body = unary();
      return id == "F" ? Formula::eventually(std::move(body), iv) : Formula::always(std::move(body), iv);
    }
    if (id == "U") fail("'U' needs a left operand");
    pos_ += id.size();
    if (id == "true") return Formula::top();
    if (id == "false") return Formula::neg(Formula::top());
    return Formula::ap(std::string(id));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string iv_str(const Interval& iv) { return "[" + num(iv.lo) + "," + num(iv.hi) + "]"; }

}  // namespace

Formula parse(std::string_view text) { return Parser(text).run(); }

std::string to_string(const Formula& f) {
  switch (f.op) {
    case Op::True: return "true";
    case Op::Atom: return f.atom;
    case Op::Not: return "!" + to_string(f.kids[0]);
    case Op::And: return "(" + to_string(f.kids[0]) + " & " + to_string(f.kids[1]) + ")";
    case Op::Or: return "(" + to_string(f.kids[0]) + " | " + to_string(f.kids[1]) + ")";
    case Op::Implies: return "(" + to_string(f.kids[0]) + " -> " + to_string(f.kids[1]) + ")";
    case Op::Until:
      return "(" + to_string(f.kids[0]) + " U" + iv_str(f.iv) + " " + to_string(f.kids[1]) + ")";
    case Op::Eventually: return "F" + iv_str(f.iv) + " " + to_string(f.kids[0]);
    case Op::Always: return "G" + iv_str(f.iv) + " " + to_string(f.kids[0]);
  }
  return {};
}

bool well_formed(const TimedWord& word) {
  if (word.empty()) return true;
  if (word.front().time != 0.0) return false;
  for (std::size_t i = 1; i < word.size(); ++i)
    if (!(word[i].time > word[i - 1].time)) return false;
  return true;
}

namespace {

bool in_window(const TimedWord& w, std::size_t i, std::size_t j, const Interval& iv) {
  const double dt = w[j].time - w[i].time;
  return dt >= iv.lo && dt <= iv.hi;
}

}  // namespace

bool evaluate(const TimedWord& word, const Formula& f, std::size_t i) {
  switch (f.op) {
    case Op::True: return true;
    case Op::Atom: return word[i].props.count(f.atom) > 0;
    case Op::Not: return !evaluate(word, f.kids[0], i);
    case Op::And: return evaluate(word, f.kids[0], i) && evaluate(word, f.kids[1], i);
    case Op::Or: return evaluate(word, f.kids[0], i) || evaluate(word, f.kids[1], i);
    case Op::Implies: return !evaluate(word, f.kids[0], i) || evaluate(word, f.kids[1], i);
    case Op::Until:
      for (std::size_t j = i; j < word.size(); ++j) {
        if (in_window(word, i, j, f.iv) && evaluate(word, f.kids[1], j)) return true;
        if (!evaluate(word, f.kids[0], j)) return false;  // phi on every k in [i, j)
        if (word[j].time - word[i].time > f.iv.hi) return false;
      }
      return false;
    case Op::Eventually:
      for (std::size_t j = i; j < word.size(); ++j) {
        if (word[j].time - word[i].time > f.iv.hi) break;
        if (in_window(word, i, j, f.iv) && evaluate(word, f.kids[0], j)) return true;
      }
      return false;
    case Op::Always:
      for (std::size_t j = i; j < word.size(); ++j) {
        if (word[j].time - word[i].time > f.iv.hi) break;
        if (in_window(word, i, j, f.iv) && !evaluate(word, f.kids[0], j)) return false;
      }
      return true;
  }
  return false;
}

bool is_response(const Formula& f) {
  return f.op == Op::Implies && f.kids[0].is_boolean() && f.kids[1].op == Op::Eventually &&
         f.kids[1].iv.lo == 0.0 && f.kids[1].kids[0].is_boolean();
}

std::vector<Formula> conjuncts(const Formula& f) {
  if (f.op != Op::And) return {f};
  auto out = conjuncts(f.kids[0]);
  auto rhs = conjuncts(f.kids[1]);
  out.insert(out.end(), rhs.begin(), rhs.end());
  return out;
}

bool holds(const TimedWord& word, const Formula& f, double check_until) {
  if (word.empty()) return false;
  for (const auto& c : conjuncts(f)) {
    if (is_response(c)) {
      for (std::size_t i = 0; i < word.size() && word[i].time <= check_until; ++i)
        if (!evaluate(word, c, i)) return false;
    } else if (!evaluate(word, c, 0)) {
      return false;
    }
  }
  return true;
}

}  // namespace mitlsynth::mitl
