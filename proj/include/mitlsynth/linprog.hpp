#pragma once

#include <vector>

namespace mitlsynth::lp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense linear program `maximize c·x  s.t.  A x <= b`.
///
/// `free[j]` marks variable j as unrestricted in sign; all others are >= 0.
/// Solved with a two-phase tableau simplex (Dantzig pricing, index
/// tie-breaks). Meant for the tiny vertex-enumerated programs of the
/// controller synthesis step, a few dozen rows and columns.
struct Problem {
  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<double> c;
  std::vector<bool> free;

  std::size_t num_vars() const { return c.size(); }
  void add_row(std::vector<double> row, double rhs) {
    A.push_back(std::move(row));
    b.push_back(rhs);
  }
};

Result solve(const Problem& problem, double tol = 1e-9);

}  // namespace mitlsynth::lp
