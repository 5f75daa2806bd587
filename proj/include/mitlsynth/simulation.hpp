#pragma once

// Closed-loop integration of planned controller schedules with facet-crossing
// detection and the lockstep waiting rule.

#include <string>
#include <vector>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/synthesis.hpp"

namespace mitlsynth {

/// One classical Runge-Kutta step of x' = Astar x + Bstar.
Vec rk4_step(const Mat& Astar, const Vec& Bstar, const Vec& x, double h);

struct CrossingResult {
  double time = 0.0;   // from the start point to the exit facet
  Vec state;           // on the exit facet
  bool escaped = false;
  bool timed_out = false;
};

/// Integrates from x0 until the exit coordinate reaches the facet of `cell`
/// on `axis` in direction `sign`; the crossing instant is refined by
/// bisection to 1e-10. Leaving through any other facet sets `escaped`.
CrossingResult integrate_to_facet(const Mat& Astar, const Vec& Bstar, const Vec& x0, const Rectangle& cell,
                                  std::size_t axis, int sign, double h, double t_max);

/// Crossing times for many start points. The parallel and serial variants
/// return identical vectors.
std::vector<CrossingResult> sweep_crossings(const Mat& Astar, const Vec& Bstar, const Rectangle& cell,
                                            std::size_t axis, int sign, const std::vector<Vec>& starts,
                                            double h, double t_max, bool parallel = true);

/// Returns `next` once x lies at least margin * width(axis) inside `target`
/// past the facet crossed in direction `sign`, otherwise `current`.
int switching_monitor(const Vec& x, const Rectangle& target, std::size_t axis, int sign, double margin,
                      int current, int next);

struct SimOptions {
  double h = 1e-4;
  double margin = 0.02;
  double bound_tol = 1e-6;
  std::size_t sample_every = 10;
};

struct Sample {
  double t = 0.0;
  Vec x;
  int controller = -1;
};

struct CrossingLog {
  int agent = 1;
  std::size_t step = 0;
  int src = -1;
  int dst = -1;
  int controller = -1;
  double depart = 0.0;
  double actual = 0.0;  // crossing time measured from departure
  double bound = 0.0;
  double switched = 0.0;  // absolute stamp at which the next controller took over or the agent froze
};

struct Trajectory {
  std::vector<std::vector<Sample>> samples;  // per agent
  std::vector<CrossingLog> crossings;        // ordered by (depart + actual, agent)
};

/// Throws BoundViolated when a crossing takes longer than its bound plus
/// tolerance and Escape when a trajectory leaves through a wrong facet.
Trajectory simulate(const Plan& plan, const std::vector<LinearAgent>& agents, const std::vector<WTS>& wts,
                    const SimOptions& opts = {});

void write_trajectory_csv(const std::string& path, const std::vector<Sample>& samples);
void write_crossings_csv(const std::string& path, const std::vector<CrossingLog>& log);
void write_svg(const std::string& path, const Partition& part, const Trajectory& traj);

}  // namespace mitlsynth
