#pragma once

// Shared helpers for the test suites: random instances and oracles that do
// not go through the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/automata.hpp"
#include "mitlsynth/mitl.hpp"
#include "mitlsynth/synthesis.hpp"

namespace testing {

using namespace mitlsynth;

#ifndef MITLSYNTH_SOURCE_DIR
#define MITLSYNTH_SOURCE_DIR "."
#endif

inline std::string source_path(const std::string& rel) { return std::string(MITLSYNTH_SOURCE_DIR) + "/" + rel; }

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen); }
};

// Crossing time of x' = Astar x + c from x0 to the hyperplane x_axis = level,
// using an adaptive Dormand-Prince integrator with dense output.
inline std::optional<double> odeint_crossing(const Mat& Astar, const Vec& c, const Vec& x0, std::size_t axis,
                                             double level, int sign, double t_max) {
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  const auto n = static_cast<std::size_t>(x0.size());
  auto rhs = [&](const State& x, State& dx, double) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = c[static_cast<Eigen::Index>(i)];
      for (std::size_t j = 0; j < n; ++j) v += Astar(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x[j];
      dx[i] = v;
    }
  };
  auto stepper = ode::make_dense_output(1e-12, 1e-12, ode::runge_kutta_dopri5<State>());
  State x(x0.data(), x0.data() + n);
  stepper.initialize(x, 0.0, 1e-4);
  auto gap = [&](const State& s) { return sign * (s[axis] - level); };
  while (stepper.current_time() < t_max) {
    stepper.do_step(rhs);
    if (gap(stepper.current_state()) >= 0.0) {
      double lo = stepper.previous_time(), hi = stepper.current_time();
      State mid(n);
      for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double m = 0.5 * (lo + hi);
        stepper.calc_state(m, mid);
        (gap(mid) >= 0.0 ? hi : lo) = m;
      }
      return hi;
    }
  }
  return std::nullopt;
}

inline mitl::TimedWord random_word(Rng& rng, const std::vector<std::string>& props, int min_len, int max_len,
                                   double t_max) {
  const int len = rng.integer(min_len, max_len);
  std::vector<double> stamps{0.0};
  for (int k = 1; k < len; ++k) stamps.push_back(rng.uniform(0.0, t_max));
  std::sort(stamps.begin(), stamps.end());
  mitl::TimedWord w;
  for (int k = 0; k < len; ++k) {
    mitl::Letter l;
    // Keep stamps strictly increasing.
    l.time = k == 0 ? 0.0 : std::max(stamps[static_cast<std::size_t>(k)], w.back().time + 1e-6);
    for (const auto& p : props)
      if (rng.coin()) l.props.insert(p);
    w.push_back(std::move(l));
  }
  return w;
}

// Random hand-built search graph with one clock. Constants are multiples of
// 0.5 and weights multiples of 0.1 so that boundary cases occur.
inline GlobalBWTS random_global(Rng& rng, int max_states) {
  GlobalBWTS g;
  g.clocks = 1;
  g.clock_offset = {0};
  const int n = rng.integer(2, max_states);
  auto random_cc = [&](double p) {
    ClockConstraint cc;
    if (rng.coin(p)) cc.atoms.push_back({0, rng.coin(0.7) ? Rel::Le : Rel::Ge, 0.5 * rng.integer(1, 6)});
    return cc;
  };
  for (int s = 0; s < n; ++s) {
    GlobalState st;
    st.initial = s == 0 || rng.coin(0.15);
    st.z = st.initial || rng.coin(0.35) ? 1u : 0u;
    st.accepting = rng.coin(0.35);
    st.invariant = g.intern(random_cc(0.5));
    g.add_state(st);
  }
  const int edges = rng.integer(n, 3 * n);
  for (int k = 0; k < edges; ++k)
    g.add_edge(rng.integer(0, n - 1), rng.integer(0, n - 1), 0.1 * rng.integer(1, 10), random_cc(0.3));
  g.finalize();
  return g;
}

// Exact replay of a lasso with a clock value vector, independent of the
// library's replay: the cycle is unrolled `repeats` times.
inline bool exact_lasso_ok(const GlobalBWTS& g, const TimedRun& run, int repeats = 60) {
  const auto& S = run.states;
  if (S.size() < 2 || S.back() != S[run.loop_start] || run.edges.size() + 1 != S.size()) return false;
  if (!g.states[static_cast<std::size_t>(S[0])].initial) return false;
  bool accepting_in_cycle = false;
  for (std::size_t j = run.loop_start; j + 1 < S.size(); ++j)
    accepting_in_cycle = accepting_in_cycle || g.states[static_cast<std::size_t>(S[j])].accepting;
  if (!accepting_in_cycle) return false;
  const auto nclk = static_cast<std::size_t>(g.clocks);
  std::vector<double> x(nclk, 0.0);
  auto inv = [&](int s) { return g.constraints[static_cast<std::size_t>(g.states[static_cast<std::size_t>(s)].invariant)]; };
  if (!inv(S[0]).holds(x)) return false;
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < run.loop_start; ++j) order.push_back(j);
  for (int r = 0; r < repeats; ++r)
    for (std::size_t j = run.loop_start; j < run.edges.size(); ++j) order.push_back(j);
  for (std::size_t j : order) {
    const auto& e = g.edges[run.edges[j]];
    if (e.src != S[j] || e.dst != S[j + 1]) return false;
    for (auto& v : x) v += e.weight;
    if (!inv(e.src).holds(x) || !g.constraints[static_cast<std::size_t>(e.guard)].holds(x)) return false;
    const auto z = g.states[static_cast<std::size_t>(e.dst)].z;
    for (std::size_t k = 0; k < nclk; ++k)
      if ((z >> k) & 1u) x[k] = 0.0;
    if (!inv(e.dst).holds(x)) return false;
  }
  return true;
}

// Random formulas of the supported fragment over p, q, r.
inline mitl::Formula random_boolean(Rng& rng, int depth) {
  static const char* names[] = {"p", "q", "r"};
  if (depth == 0 || rng.coin(0.4)) {
    if (rng.coin(0.1)) return mitl::Formula::top();
    return mitl::Formula::ap(names[rng.integer(0, 2)]);
  }
  switch (rng.integer(0, 2)) {
    case 0: return mitl::Formula::neg(random_boolean(rng, depth - 1));
    case 1: return mitl::Formula::conj(random_boolean(rng, depth - 1), random_boolean(rng, depth - 1));
    default: return mitl::Formula::disj(random_boolean(rng, depth - 1), random_boolean(rng, depth - 1));
  }
}

inline mitl::Interval random_window(Rng& rng) { return {0.0, 0.25 * rng.integer(1, 8) + (rng.coin(0.3) ? 0.1 : 0.0)}; }

// kind 0..4: F, G, U, response, boolean; -1 picks one at random
inline mitl::Formula random_pattern(Rng& rng, int kind = -1) {
  switch (kind < 0 ? rng.integer(0, 4) : kind) {
    case 0: return mitl::Formula::eventually(random_boolean(rng, 2), random_window(rng));
    case 1: return mitl::Formula::always(random_boolean(rng, 2), random_window(rng));
    case 2: return mitl::Formula::until(random_boolean(rng, 2), random_boolean(rng, 2), random_window(rng));
    case 3:
      return mitl::Formula::implies(random_boolean(rng, 2),
                                    mitl::Formula::eventually(random_boolean(rng, 2), random_window(rng)));
    default: return random_boolean(rng, 2);
  }
}

inline mitl::Formula random_fragment(Rng& rng) {
  if (rng.coin(0.4)) return mitl::Formula::conj(random_pattern(rng), random_pattern(rng));
  return random_pattern(rng);
}

inline LinearAgent make_agent(Mat A, Mat B, Vec x0, double u_max, int id = 1) {
  LinearAgent a;
  a.A = std::move(A);
  a.B = std::move(B);
  a.x0 = std::move(x0);
  a.u_max = u_max;
  a.id = id;
  return a;
}

}  // namespace testing
