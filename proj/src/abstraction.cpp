#include "mitlsynth/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mitlsynth/error.hpp"
#include "mitlsynth/linprog.hpp"

namespace mitlsynth {

bool Rectangle::contains(const Vec& x, double tol) const {
  if (static_cast<std::size_t>(x.size()) != dim()) return false;
  for (std::size_t k = 0; k < dim(); ++k)
    if (x[static_cast<Eigen::Index>(k)] < a[k] - tol || x[static_cast<Eigen::Index>(k)] > b[k] + tol)
      return false;
  return true;
}

Vec Rectangle::vertex(unsigned mask) const {
  Vec v(static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < dim(); ++k)
    v[static_cast<Eigen::Index>(k)] = (mask >> k) & 1u ? b[k] : a[k];
  return v;
}

Rectangle make_rectangle(std::vector<double> a, std::vector<double> b, int id) {
  if (a.size() != b.size() || a.empty())
    throw Error(Errc::InvalidGeometry, "rectangle corners must have equal, nonzero dimension");
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!(a[k] < b[k]))
      throw Error(Errc::InvalidGeometry, "rectangle needs a_i < b_i on axis " + std::to_string(k));
  return Rectangle{std::move(a), std::move(b), id};
}

namespace {

bool on_grid(const std::vector<double>& lines, double v) {
  const double scale = std::max(1.0, std::abs(lines.back() - lines.front()));
  return std::any_of(lines.begin(), lines.end(),
                     [&](double g) { return std::abs(g - v) <= 1e-12 * scale; });
}

}  // namespace

Partition build_partition(const Rectangle& bounds, const std::vector<std::vector<double>>& cuts,
                          const std::vector<LabeledRegion>& regions,
                          const std::vector<std::pair<int, int>>& walls) {
  const std::size_t p = bounds.dim();
  if (p == 0) throw Error(Errc::EmptyPartition, "workspace has no dimensions");
  for (std::size_t k = 0; k < p; ++k)
    if (!(bounds.a[k] < bounds.b[k]))
      throw Error(Errc::InvalidGeometry, "workspace bounds are degenerate");
  if (cuts.size() > p) throw Error(Errc::InvalidGeometry, "more cut lists than axes");

  Partition part;
  part.bounds = bounds;
  part.grid.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    auto& lines = part.grid[k];
    lines.push_back(bounds.a[k]);
    double prev = bounds.a[k];
    if (k < cuts.size()) {
      for (double c : cuts[k]) {
        if (!(c > prev) || !(c < bounds.b[k]))
          throw Error(Errc::InvalidGeometry,
                      "cuts on axis " + std::to_string(k) + " must be increasing and interior");
        lines.push_back(c);
        prev = c;
      }
    }
    lines.push_back(bounds.b[k]);
  }

  std::size_t total = 1;
  for (const auto& lines : part.grid) total *= lines.size() - 1;
  if (total == 0) throw Error(Errc::EmptyPartition, "grid has no cells");

  for (std::size_t id = 0; id < total; ++id) {
    std::vector<std::size_t> idx(p);
    std::size_t rest = id;
    std::vector<double> a(p), b(p);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t n = part.grid[k].size() - 1;
      idx[k] = rest % n;
      rest /= n;
      a[k] = part.grid[k][idx[k]];
      b[k] = part.grid[k][idx[k] + 1];
    }
    part.cells.push_back(Rectangle{a, b, static_cast<int>(id)});
    part.grid_index.push_back(std::move(idx));
  }
  part.labels.assign(total, {});

  for (const auto& region : regions) {
    if (region.box.dim() != p)
      throw Error(Errc::InvalidGeometry, "region '" + region.label + "' has wrong dimension");
    for (std::size_t k = 0; k < p; ++k) {
      if (!on_grid(part.grid[k], region.box.a[k]) || !on_grid(part.grid[k], region.box.b[k])) {
        std::ostringstream os;
        os << "region '" << region.label << "' boundary on axis " << k
           << " does not lie on a grid line";
        throw Error(Errc::RegionMisaligned, os.str());
      }
    }
    part.propositions.insert(region.label);
    for (std::size_t id = 0; id < total; ++id) {
      const auto& cell = part.cells[id];
      bool inside = true;
      for (std::size_t k = 0; k < p && inside; ++k) {
        const double tol = 1e-12 * std::max(1.0, bounds.width(k));
        inside = cell.a[k] >= region.box.a[k] - tol && cell.b[k] <= region.box.b[k] + tol;
      }
      if (inside) part.labels[id].insert(region.label);
    }
  }

  for (auto [i, j] : walls) {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= total || static_cast<std::size_t>(j) >= total)
      throw Error(Errc::InvalidGeometry, "wall names an unknown cell");
    if (!part.shared_facet(i, j))
      throw Error(Errc::InvalidGeometry, "wall between cells " + std::to_string(i) + " and " +
                                             std::to_string(j) + " which share no facet");
    part.blocked.insert({std::min(i, j), std::max(i, j)});
  }
  return part;
}

std::vector<int> Partition::cells_containing(const Vec& x, double tol) const {
  std::vector<int> out;
  for (const auto& cell : cells)
    if (cell.contains(x, tol)) out.push_back(cell.id);
  return out;
}

std::optional<Facet> Partition::shared_facet(int from, int to) const {
  const auto& gi = grid_index[static_cast<std::size_t>(from)];
  const auto& gj = grid_index[static_cast<std::size_t>(to)];
  std::optional<Facet> facet;
  for (std::size_t k = 0; k < gi.size(); ++k) {
    if (gi[k] == gj[k]) continue;
    if (facet) return std::nullopt;
    if (gj[k] == gi[k] + 1)
      facet = Facet{k, +1};
    else if (gi[k] == gj[k] + 1)
      facet = Facet{k, -1};
    else
      return std::nullopt;
  }
  return facet;
}

bool Partition::is_blocked(int from, int to) const {
  return blocked.count({std::min(from, to), std::max(from, to)}) > 0;
}

std::vector<int> Partition::open_neighbors(int cell) const {
  std::vector<int> out;
  for (std::size_t k = 0; k < dim(); ++k) {
    for (int step : {-1, +1}) {
      auto idx = grid_index[static_cast<std::size_t>(cell)];
      if (step < 0 && idx[k] == 0) continue;
      if (step > 0 && idx[k] + 2 >= grid[k].size()) continue;
      idx[k] = static_cast<std::size_t>(static_cast<long>(idx[k]) + step);
      std::size_t id = 0, mul = 1;
      for (std::size_t a = 0; a < dim(); ++a) {
        id += idx[a] * mul;
        mul *= grid[a].size() - 1;
      }
      if (!is_blocked(cell, static_cast<int>(id))) out.push_back(static_cast<int>(id));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Controller LP. Unknowns: F (m x n, row-major), g (m), slack s >= 0 with
// exit velocity floor eps + s; maximize s. Every constraint is affine in x,
// so imposing it at the 2^n vertices of the source cell imposes it on the
// whole cell.
std::optional<AffineController> try_synthesize_controller(const LinearAgent& agent,
                                                          const Partition& part, int source,
                                                          int target, double eps) {
  const auto facet = part.shared_facet(source, target);
  if (!facet) throw Error(Errc::InvalidGeometry, "cells share no facet");
  if (!(eps > 0.0)) throw Error(Errc::InvalidGeometry, "eps must be positive");
  const std::size_t n = agent.state_dim();
  const std::size_t m = agent.input_dim();
  if (n != part.dim()) throw Error(Errc::InvalidGeometry, "agent dimension differs from workspace");

  const Rectangle& cell = part.cells[static_cast<std::size_t>(source)];
  const std::size_t nf = m * n;
  const std::size_t nvars = nf + m + 1;
  const std::size_t slack = nf + m;
  auto fvar = [n](std::size_t r, std::size_t j) { return r * n + j; };
  auto gvar = [nf](std::size_t r) { return nf + r; };

  lp::Problem prob;
  prob.c.assign(nvars, 0.0);
  prob.c[slack] = 1.0;
  prob.free.assign(nvars, true);
  prob.free[slack] = false;

  // Row of coefficients for (B u(v))_k as a function of the unknowns.
  auto bu_row = [&](const Vec& v, std::size_t k) {
    std::vector<double> row(nvars, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      const double bkr = agent.B(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
      if (bkr == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) row[fvar(r, j)] += bkr * v[static_cast<Eigen::Index>(j)];
      row[gvar(r)] += bkr;
    }
    return row;
  };
  auto negate = [](std::vector<double> row) {
    for (auto& e : row) e = -e;
    return row;
  };

  const std::size_t axis = facet->axis;
  const int sign = facet->sign;
  for (unsigned mask = 0; mask < cell.num_vertices(); ++mask) {
    const Vec v = cell.vertex(mask);
    const Vec drift = agent.A * v;
    for (std::size_t r = 0; r < m; ++r) {
      std::vector<double> row(nvars, 0.0);
      for (std::size_t j = 0; j < n; ++j) row[fvar(r, j)] = v[static_cast<Eigen::Index>(j)];
      row[gvar(r)] = 1.0;
      prob.add_row(row, agent.u_max);
      prob.add_row(negate(row), agent.u_max);
    }
    // sign * xdot_axis >= eps + s
    {
      auto row = bu_row(v, axis);
      if (sign > 0) row = negate(row);
      row[slack] = 1.0;
      prob.add_row(row, sign * drift[static_cast<Eigen::Index>(axis)] - eps);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == axis) continue;
      const bool upper = (mask >> j) & 1u;
      auto row = bu_row(v, j);
      if (upper)  // xdot_j <= -eps on the upper facet
        prob.add_row(row, -eps - drift[static_cast<Eigen::Index>(j)]);
      else  // xdot_j >= eps on the lower facet
        prob.add_row(negate(row), drift[static_cast<Eigen::Index>(j)] - eps);
    }
  }

  const lp::Result res = lp::solve(prob);
  if (res.status != lp::Status::Optimal) return std::nullopt;

  AffineController ctl;
  ctl.F = Mat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  ctl.g = Vec::Zero(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j)
      ctl.F(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = res.x[fvar(r, j)];
    ctl.g[static_cast<Eigen::Index>(r)] = res.x[gvar(r)];
  }
  ctl.K = agent.B * ctl.F;
  ctl.c = agent.B * ctl.g;
  ctl.source = source;
  ctl.target = target;
  ctl.axis = axis;
  ctl.sign = sign;
  ctl.exit_velocity = eps + res.x[slack];

  // Reject solutions that only satisfy the vertex constraints up to simplex
  // round-off by more than a tiny fraction of eps.
  const double slop = 1e-7 * eps;
  const Mat Astar = agent.A + ctl.K;
  for (unsigned mask = 0; mask < cell.num_vertices(); ++mask) {
    const Vec v = cell.vertex(mask);
    const Vec xdot = Astar * v + ctl.c;
    const Vec u = ctl.input(v);
    if (u.cwiseAbs().maxCoeff() > agent.u_max * (1.0 + 1e-9) + 1e-12) return std::nullopt;
    if (sign * xdot[static_cast<Eigen::Index>(axis)] < eps - slop) return std::nullopt;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == axis) continue;
      const double vj = xdot[static_cast<Eigen::Index>(j)];
      if ((mask >> j) & 1u ? vj > -eps + slop : vj < eps - slop) return std::nullopt;
    }
  }
  return ctl;
}

AffineController synthesize_controller(const LinearAgent& agent, const Partition& part, int source,
                                       int target, double eps) {
  auto ctl = try_synthesize_controller(agent, part, source, target, eps);
  if (!ctl)
    throw Error(Errc::Infeasible, "no admissible controller for " + std::to_string(source) +
                                      " -> " + std::to_string(target));
  return *ctl;
}

double min_cross_term(const Mat& Astar, const Rectangle& cell, std::size_t i) {
  double sum = 0.0;
  for (std::size_t j = 0; j < cell.dim(); ++j) {
    if (j == i) continue;
    const double coef = Astar(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (coef > 0.0)
      sum += coef * cell.a[j];
    else if (coef < 0.0)
      sum += coef * cell.b[j];
  }
  return sum;
}

double transition_time_bound(double diag, double cross, double offset, double y0, double y1,
                             double diag_tol) {
  const double base = cross + offset;
  if (std::abs(diag) < diag_tol) {
    if (!(base > 0.0))
      throw Error(Errc::VelocityVanishes, "worst-case velocity is not positive");
    return (y1 - y0) / base;
  }
  const double v0 = diag * y0 + base;
  const double v1 = diag * y1 + base;
  if (!(v0 > 0.0) || !(v1 > 0.0))
    throw Error(Errc::VelocityVanishes, "worst-case velocity is not positive on the crossing");
  // ln(v1 / v0) / diag, written to stay accurate for small diag.
  return std::log1p(diag * (y1 - y0) / v0) / diag;
}

double max_transition_time(const Mat& Astar, const Vec& Bstar, const Rectangle& cell,
                           std::size_t axis, int sign, double diag_tol) {
  const auto i = static_cast<Eigen::Index>(axis);
  const double diag = Astar(i, i);
  if (sign > 0)
    return transition_time_bound(diag, min_cross_term(Astar, cell, axis), Bstar[i], cell.a[axis],
                                 cell.b[axis], diag_tol);
  // y = -x_axis: same diagonal, negated cross row and offset.
  Mat reflected = Astar;
  reflected.row(i) *= -1.0;
  reflected(i, i) = diag;
  return transition_time_bound(diag, min_cross_term(reflected, cell, axis), -Bstar[i],
                               -cell.b[axis], -cell.a[axis], diag_tol);
}

namespace {

struct Candidate {
  int src;
  int dst;
};

std::optional<WtsTransition> build_transition(const LinearAgent& agent, const Partition& part,
                                              const Candidate& cand, const WtsOptions& opts,
                                              std::string& why) {
  auto ctl = try_synthesize_controller(agent, part, cand.src, cand.dst, opts.eps);
  if (!ctl) {
    why = "controller LP infeasible";
    return std::nullopt;
  }
  const Mat Astar = agent.A + ctl->K;
  try {
    const double w = max_transition_time(Astar, ctl->c, part.cells[static_cast<std::size_t>(cand.src)],
                                         ctl->axis, ctl->sign, opts.diag_tol);
    if (!(w > 0.0) || !std::isfinite(w)) {
      why = "non-positive transition time";
      return std::nullopt;
    }
    return WtsTransition{cand.src, cand.dst, std::move(*ctl), w};
  } catch (const Error& e) {
    why = e.what();
    return std::nullopt;
  }
}

}  // namespace

WTS build_wts(const LinearAgent& agent, const Partition& part, const WtsOptions& opts) {
  if (agent.state_dim() != part.dim())
    throw Error(Errc::InvalidGeometry, "agent dimension differs from workspace");
  if (!(agent.u_max > 0.0)) throw Error(Errc::InvalidGeometry, "u_max must be positive");
  if (!part.bounds.contains(agent.x0, 1e-12))
    throw Error(Errc::InvalidGeometry, "agent " + std::to_string(agent.id) + " starts outside the workspace");

  WTS wts;
  wts.agent_id = agent.id;
  wts.cells = part.cells;
  wts.labels = part.labels;
  wts.propositions = part.propositions;
  wts.initial = part.cells_containing(agent.x0);

  std::vector<Candidate> cands;
  for (const auto& cell : part.cells)
    for (int nb : part.open_neighbors(cell.id)) cands.push_back({cell.id, nb});

  std::vector<std::optional<WtsTransition>> built(cands.size());
  std::vector<std::string> why(cands.size());
  const auto count = static_cast<long>(cands.size());
#pragma omp parallel for schedule(dynamic) if (opts.parallel)
  for (long k = 0; k < count; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    built[idx] = build_transition(agent, part, cands[idx], opts, why[idx]);
  }

  wts.out.assign(part.size(), {});
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (!built[k]) {
      wts.diagnostics.push_back("dropped " + std::to_string(cands[k].src) + " -> " +
                                std::to_string(cands[k].dst) + ": " + why[k]);
      continue;
    }
    wts.out[static_cast<std::size_t>(cands[k].src)].push_back(static_cast<int>(wts.transitions.size()));
    wts.transitions.push_back(std::move(*built[k]));
  }
  for (int init : wts.initial)
    if (wts.out[static_cast<std::size_t>(init)].empty())
      wts.diagnostics.push_back("warning: DisconnectedInitial: initial cell " + std::to_string(init) +
                                " has no outgoing transitions");
  return wts;
}

ordered_json wts_to_json(const WTS& wts) {
  ordered_json j;
  j["agent"] = wts.agent_id;
  ordered_json states = ordered_json::array();
  for (std::size_t s = 0; s < wts.size(); ++s) {
    ordered_json st;
    st["id"] = wts.cells[s].id;
    st["a"] = wts.cells[s].a;
    st["b"] = wts.cells[s].b;
    st["labels"] = std::vector<std::string>(wts.labels[s].begin(), wts.labels[s].end());
    states.push_back(std::move(st));
  }
  j["states"] = std::move(states);
  j["initial"] = wts.initial;
  ordered_json trans = ordered_json::array();
  for (std::size_t t = 0; t < wts.transitions.size(); ++t) {
    const auto& tr = wts.transitions[t];
    ordered_json e;
    e["id"] = t;
    e["src"] = tr.src;
    e["dst"] = tr.dst;
    e["direction"] = tr.controller.axis;
    e["sign"] = tr.controller.sign;
    std::vector<double> k;
    for (Eigen::Index r = 0; r < tr.controller.K.rows(); ++r)
      for (Eigen::Index c = 0; c < tr.controller.K.cols(); ++c) k.push_back(tr.controller.K(r, c));
    e["K"] = k;
    e["c"] = std::vector<double>(tr.controller.c.data(), tr.controller.c.data() + tr.controller.c.size());
    e["weight"] = tr.weight;
    trans.push_back(std::move(e));
  }
  j["transitions"] = std::move(trans);
  return j;
}

}  // namespace mitlsynth
