#include "mitlsynth/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

Vec rk4_step(const Mat& Astar, const Vec& Bstar, const Vec& x, double h) {
  const Vec k1 = Astar * x + Bstar;
  const Vec k2 = Astar * (x + 0.5 * h * k1) + Bstar;
  const Vec k3 = Astar * (x + 0.5 * h * k2) + Bstar;
  const Vec k4 = Astar * (x + h * k3) + Bstar;
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

constexpr double kBisectTol = 1e-10;

double escape_tol(const Rectangle& cell) {
  double w = 0.0;
  for (std::size_t k = 0; k < cell.dim(); ++k) w = std::max(w, cell.width(k));
  return 1e-9 * std::max(1.0, w);
}

template <class Sink>
CrossingResult integrate_impl(const Mat& Astar, const Vec& Bstar, const Vec& x0, const Rectangle& cell,
                              std::size_t axis, int sign, double h, double t_max, Sink&& sink) {
  const auto i = static_cast<Eigen::Index>(axis);
  const double facet = sign > 0 ? cell.b[axis] : cell.a[axis];
  const double entry = sign > 0 ? cell.a[axis] : cell.b[axis];
  const double tol = escape_tol(cell);
  auto past = [&](const Vec& y) { return sign * (y[i] - facet) >= 0.0; };

  CrossingResult res;
  Vec x = x0;
  if (past(x)) {
    res.state = x;
    return res;
  }
  double t = 0.0;
  while (t < t_max) {
    const Vec xn = rk4_step(Astar, Bstar, x, h);
    if (past(xn)) {
      double lo = 0.0, hi = h;
      while (hi - lo > kBisectTol) {
        const double mid = 0.5 * (lo + hi);
        if (past(rk4_step(Astar, Bstar, x, mid)))
          hi = mid;
        else
          lo = mid;
      }
      res.time = t + hi;
      res.state = rk4_step(Astar, Bstar, x, hi);
      return res;
    }
    for (std::size_t j = 0; j < cell.dim(); ++j) {
      const double v = xn[static_cast<Eigen::Index>(j)];
      const bool out = j == axis ? sign * (v - entry) < -tol : (v < cell.a[j] - tol || v > cell.b[j] + tol);
      if (out) {
        res.escaped = true;
        res.time = t + h;
        res.state = xn;
        return res;
      }
    }
    x = xn;
    t += h;
    sink(t, x);
  }
  res.timed_out = true;
  res.time = t;
  res.state = x;
  return res;
}

}  // namespace

CrossingResult integrate_to_facet(const Mat& Astar, const Vec& Bstar, const Vec& x0, const Rectangle& cell,
                                  std::size_t axis, int sign, double h, double t_max) {
  return integrate_impl(Astar, Bstar, x0, cell, axis, sign, h, t_max, [](double, const Vec&) {});
}

std::vector<CrossingResult> sweep_crossings(const Mat& Astar, const Vec& Bstar, const Rectangle& cell,
                                            std::size_t axis, int sign, const std::vector<Vec>& starts,
                                            double h, double t_max, bool parallel) {
  std::vector<CrossingResult> out(starts.size());
  const auto count = static_cast<long>(starts.size());
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    out[idx] = integrate_to_facet(Astar, Bstar, starts[idx], cell, axis, sign, h, t_max);
  }
  return out;
}

int switching_monitor(const Vec& x, const Rectangle& target, std::size_t axis, int sign, double margin,
                      int current, int next) {
  const double facet = sign > 0 ? target.a[axis] : target.b[axis];
  const double depth = sign * (x[static_cast<Eigen::Index>(axis)] - facet);
  return depth >= margin * target.width(axis) ? next : current;
}

Trajectory simulate(const Plan& plan, const std::vector<LinearAgent>& agents, const std::vector<WTS>& wts,
                    const SimOptions& opts) {
  if (!(opts.h > 0.0)) throw Error(Errc::InvalidGeometry, "integration step must be positive");
  Trajectory traj;
  traj.samples.resize(plan.agents.size());
  for (std::size_t k = 0; k < plan.agents.size(); ++k) {
    const auto& sched = plan.agents[k];
    const auto& agent = agents[k];
    const auto& sys = wts[k];
    auto& samples = traj.samples[k];
    Vec x = agent.x0;
    double now = 0.0;
    samples.push_back({0.0, x, sched.controllers.empty() ? -1 : sched.controllers[0]});
    auto record = [&](double t, const Vec& y, int ctrl) {
      if (t > samples.back().t) samples.push_back({t, y, ctrl});
    };

    for (std::size_t j = 0; j < sched.controllers.size(); ++j) {
      const int ctrl = sched.controllers[j];
      const auto& tr = sys.transitions[static_cast<std::size_t>(ctrl)];
      const auto& c = tr.controller;
      const Mat Astar = agent.A + c.K;
      const double depart = sched.departures[j];
      const double next_depart = plan.times[j + 1];
      const Rectangle& src = sys.cells[static_cast<std::size_t>(tr.src)];
      const Rectangle& dst = sys.cells[static_cast<std::size_t>(tr.dst)];
      // Waiting: the agent holds its position until the collective departure.
      record(depart, x, ctrl);
      now = depart;

      std::size_t n = 0;
      auto sink = [&](double t, const Vec& y) {
        if (++n % opts.sample_every == 0) record(depart + t, y, ctrl);
      };
      const double t_max = tr.weight + opts.bound_tol + 2.0 * opts.h;
      const CrossingResult r = integrate_impl(Astar, c.c, x, src, c.axis, c.sign, opts.h, t_max, sink);
      const std::string where = "agent " + std::to_string(agent.id) + " step " + std::to_string(j) + " (" +
                                std::to_string(tr.src) + " -> " + std::to_string(tr.dst) + ")";
      if (r.escaped) throw Error(Errc::Escape, where + " left its cell through a non-exit facet");
      if (r.timed_out || r.time > tr.weight + opts.bound_tol)
        throw Error(Errc::BoundViolated, where + ": crossing took longer than the bound " +
                                             format_real(tr.weight));
      x = r.state;
      now = depart + r.time;
      record(now, x, ctrl);

      // Keep the old controller until far enough inside the new cell or the
      // next departure, whichever comes first; then freeze.
      const int next_ctrl = j + 1 < sched.controllers.size() ? sched.controllers[j + 1] : -1;
      std::size_t steps = 0;
      while (now < next_depart &&
             switching_monitor(x, dst, c.axis, c.sign, opts.margin, ctrl, next_ctrl) == ctrl) {
        const double dt = std::min(opts.h, next_depart - now);
        x = rk4_step(Astar, c.c, x, dt);
        now += dt;
        if (++steps % opts.sample_every == 0) record(now, x, ctrl);
      }
      record(now, x, ctrl);

      CrossingLog log;
      log.agent = agent.id;
      log.step = j;
      log.src = tr.src;
      log.dst = tr.dst;
      log.controller = ctrl;
      log.depart = depart;
      log.actual = r.time;
      log.bound = tr.weight;
      log.switched = now;
      traj.crossings.push_back(log);
    }
    if (!plan.times.empty()) record(plan.times.back(), x, -1);
  }
  std::stable_sort(traj.crossings.begin(), traj.crossings.end(), [](const CrossingLog& a, const CrossingLog& b) {
    const double ta = a.depart + a.actual, tb = b.depart + b.actual;
    return ta != tb ? ta < tb : a.agent < b.agent;
  });
  return traj;
}

void write_trajectory_csv(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  const auto n = samples.empty() ? 0 : samples.front().x.size();
  out << "t";
  for (Eigen::Index k = 0; k < n; ++k) out << ",x" << (k + 1);
  out << ",controller\n";
  for (const auto& s : samples) {
    out << format_real(s.t);
    for (Eigen::Index k = 0; k < n; ++k) out << ',' << format_real(s.x[k]);
    out << ',' << s.controller << '\n';
  }
}

void write_crossings_csv(const std::string& path, const std::vector<CrossingLog>& log) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << "agent,step,src,dst,controller,depart,t_actual,t_bound\n";
  for (const auto& c : log)
    out << c.agent << ',' << c.step << ',' << c.src << ',' << c.dst << ',' << c.controller << ','
        << format_real(c.depart) << ',' << format_real(c.actual) << ',' << format_real(c.bound) << '\n';
}

void write_svg(const std::string& path, const Partition& part, const Trajectory& traj) {
  if (part.dim() < 2) return;
  std::ofstream out(path);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  const double scale = 200.0, pad = 20.0;
  const double w = part.bounds.width(0) * scale, hgt = part.bounds.width(1) * scale;
  auto px = [&](double x) { return pad + (x - part.bounds.a[0]) * scale; };
  auto py = [&](double y) { return pad + hgt - (y - part.bounds.a[1]) * scale; };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 2 * pad << "\" height=\"" << hgt + 2 * pad
      << "\">\n";
  for (std::size_t c = 0; c < part.size(); ++c) {
    const auto& r = part.cells[c];
    out << "<rect x=\"" << px(r.a[0]) << "\" y=\"" << py(r.b[1]) << "\" width=\"" << r.width(0) * scale
        << "\" height=\"" << r.width(1) * scale << "\" fill=\"none\" stroke=\"#bbb\"/>\n";
    std::string text = std::to_string(c);
    for (const auto& l : part.labels[c]) text += " " + l;
    out << "<text x=\"" << px(r.a[0]) + 4 << "\" y=\"" << py(r.b[1]) + 14 << "\" font-size=\"12\">" << text
        << "</text>\n";
  }
  for (const auto& [u, v] : part.blocked) {
    const auto f = part.shared_facet(u, v);
    if (!f) continue;
    const auto& r = part.cells[static_cast<std::size_t>(u)];
    const std::size_t other = 1 - f->axis;
    const double at = f->sign > 0 ? r.b[f->axis] : r.a[f->axis];
    double x1, y1, x2, y2;
    if (f->axis == 0) {
      x1 = x2 = px(at);
      y1 = py(r.a[other]);
      y2 = py(r.b[other]);
    } else {
      y1 = y2 = py(at);
      x1 = px(r.a[other]);
      x2 = px(r.b[other]);
    }
    out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
        << "\" stroke=\"black\" stroke-width=\"4\"/>\n";
  }
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"};
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[k % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& s : traj.samples[k]) out << px(s.x[0]) << ',' << py(s.x[1]) << ' ';
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace mitlsynth
