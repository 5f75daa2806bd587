#pragma once

// Workspace abstraction: rectangular partitions, facet-crossing affine
// controllers and worst-case transition times, assembled into one weighted
// transition system per agent.

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mitlsynth/json_out.hpp"

namespace mitlsynth {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using PropSet = std::set<std::string>;

/// Closed axis-aligned box {x : a <= x <= b}.
struct Rectangle {
  std::vector<double> a;
  std::vector<double> b;
  int id = -1;

  std::size_t dim() const { return a.size(); }
  double width(std::size_t axis) const { return b[axis] - a[axis]; }
  bool contains(const Vec& x, double tol = 0.0) const;
  /// Vertex selected by `mask`: bit k set picks b_k, clear picks a_k.
  Vec vertex(unsigned mask) const;
  unsigned num_vertices() const { return 1u << dim(); }
};

/// Validates a_i < b_i on every axis.
Rectangle make_rectangle(std::vector<double> a, std::vector<double> b, int id = -1);

struct LabeledRegion {
  std::string label;
  Rectangle box;
};

/// Shared facet between two grid cells: the axis it is normal to and the
/// direction of travel from the first cell into the second.
struct Facet {
  std::size_t axis = 0;
  int sign = +1;
};

struct Partition {
  Rectangle bounds;
  std::vector<std::vector<double>> grid;  // grid lines per axis, bounds included
  std::vector<Rectangle> cells;
  std::vector<std::vector<std::size_t>> grid_index;  // per cell, per axis
  std::vector<PropSet> labels;
  std::set<std::pair<int, int>> blocked;  // stored with first < second
  PropSet propositions;

  std::size_t size() const { return cells.size(); }
  std::size_t dim() const { return bounds.dim(); }
  std::vector<int> cells_containing(const Vec& x, double tol = 1e-12) const;
  std::optional<Facet> shared_facet(int from, int to) const;
  bool is_blocked(int from, int to) const;
  /// Cells sharing an unblocked facet with `cell`, ascending id.
  std::vector<int> open_neighbors(int cell) const;
};

/// Cell ids enumerate the grid with axis 0 varying fastest.
/// `cuts[k]` are the interior cut positions on axis k; `walls` name pairs of
/// cells whose common facet is impassable.
Partition build_partition(const Rectangle& bounds, const std::vector<std::vector<double>>& cuts,
                          const std::vector<LabeledRegion>& regions,
                          const std::vector<std::pair<int, int>>& walls);

struct LinearAgent {
  Mat A;
  Mat B;
  Vec x0;
  double u_max = 1.0;
  int id = 1;

  std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(B.cols()); }
};

/// u(x) = F x + g on the source cell; closed loop x' = (A + K) x + c with
/// K = B F and c = B g.
struct AffineController {
  Mat F;
  Vec g;
  Mat K;
  Vec c;
  int source = -1;
  int target = -1;
  std::size_t axis = 0;
  int sign = +1;
  double exit_velocity = 0.0;  // guaranteed minimum along the exit direction

  Vec input(const Vec& x) const { return F * x + g; }
};

/// Solves the vertex-enumerated controller LP for source -> target.
/// Throws Error(Infeasible) when no admissible controller exists.
AffineController synthesize_controller(const LinearAgent& agent, const Partition& part, int source,
                                       int target, double eps);
std::optional<AffineController> try_synthesize_controller(const LinearAgent& agent,
                                                          const Partition& part, int source,
                                                          int target, double eps);

/// Smallest value of sum_{j != i} A*_ij x_j over the cell.
double min_cross_term(const Mat& Astar, const Rectangle& cell, std::size_t i);

inline constexpr double kDefaultDiagTol = 1e-8;

/// Time for y' = diag*y + cross + offset to go from y0 to y1 (y1 > y0).
/// Falls back to the constant-velocity limit when |diag| < diag_tol.
double transition_time_bound(double diag, double cross, double offset, double y0, double y1,
                             double diag_tol = kDefaultDiagTol);

/// Worst-case time to cross `cell` along `axis` in direction `sign` under
/// x' = Astar x + Bstar. Decreasing motion is handled by reflecting the axis.
double max_transition_time(const Mat& Astar, const Vec& Bstar, const Rectangle& cell,
                           std::size_t axis, int sign, double diag_tol = kDefaultDiagTol);

struct WtsTransition {
  int src = -1;
  int dst = -1;
  AffineController controller;
  double weight = 0.0;
};

struct WTS {
  int agent_id = 1;
  std::vector<Rectangle> cells;
  std::vector<PropSet> labels;
  PropSet propositions;
  std::vector<int> initial;
  std::vector<WtsTransition> transitions;  // sorted by (src, dst)
  std::vector<std::vector<int>> out;       // transition ids per source state
  std::vector<std::string> diagnostics;

  std::size_t size() const { return cells.size(); }
};

struct WtsOptions {
  double eps = 0.05;
  double diag_tol = kDefaultDiagTol;
  bool parallel = true;
};

/// One state per cell; every open facet pair gets a controller and a T^max
/// weight, or is dropped (with a diagnostics entry) when the LP is
/// infeasible. The parallel and serial builds produce identical systems.
WTS build_wts(const LinearAgent& agent, const Partition& part, const WtsOptions& opts = {});

ordered_json wts_to_json(const WTS& wts);

}  // namespace mitlsynth
