// Serial vs OpenMP timing for the WTS build and the crossing sweep.

#include <chrono>
#include <cstdio>
#include <random>

#include <omp.h>

#include "mitlsynth/abstraction.hpp"
#include "mitlsynth/json_out.hpp"
#include "mitlsynth/simulation.hpp"

using namespace mitlsynth;

namespace {

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 24;
  std::printf("threads: %d\n", omp_get_max_threads());

  std::vector<double> cuts;
  for (int k = 1; k < n; ++k) cuts.push_back(k);
  const auto part = build_partition(make_rectangle({0, 0}, {double(n), double(n)}), {cuts, cuts}, {}, {});
  LinearAgent agent;
  agent.A = (Mat(2, 2) << 0.2, 0.1, -0.1, 0.3).finished();
  agent.B = Mat::Identity(2, 2);
  agent.x0 = Vec::Constant(2, 0.5);
  agent.u_max = 5.0;

  WTS serial, parallel;
  const double ts = best_of(3, [&] { serial = build_wts(agent, part, {0.05, kDefaultDiagTol, false}); });
  const double tp = best_of(3, [&] { parallel = build_wts(agent, part, {0.05, kDefaultDiagTol, true}); });
  const bool same_wts = dump_json(wts_to_json(serial)) == dump_json(wts_to_json(parallel));
  std::printf("build_wts      %4zu cells %5zu transitions  serial %8.4f s  parallel %8.4f s  speedup %5.2f  identical %s\n",
              part.size(), serial.transitions.size(), ts, tp, ts / tp, same_wts ? "yes" : "NO");

  const auto& tr = serial.transitions.front();
  const Mat As = agent.A + tr.controller.K;
  const Rectangle& cell = part.cells[static_cast<std::size_t>(tr.src)];
  std::mt19937_64 gen(7);
  std::vector<Vec> starts;
  for (int k = 0; k < 4000; ++k) {
    Vec x(2);
    for (int i = 0; i < 2; ++i) x[i] = std::uniform_real_distribution<double>(cell.a[i], cell.b[i])(gen);
    starts.push_back(x);
  }
  std::vector<CrossingResult> a, b;
  const double ss = best_of(3, [&] {
    a = sweep_crossings(As, tr.controller.c, cell, tr.controller.axis, tr.controller.sign, starts, 1e-4, 10.0, false);
  });
  const double sp = best_of(3, [&] {
    b = sweep_crossings(As, tr.controller.c, cell, tr.controller.axis, tr.controller.sign, starts, 1e-4, 10.0, true);
  });
  bool same = a.size() == b.size();
  for (std::size_t k = 0; same && k < a.size(); ++k) same = a[k].time == b[k].time && a[k].state == b[k].state;
  std::printf("sweep_crossings %5zu starts                   serial %8.4f s  parallel %8.4f s  speedup %5.2f  identical %s\n",
              starts.size(), ss, sp, ss / sp, same ? "yes" : "NO");
  return same && same_wts ? 0 : 1;
}
