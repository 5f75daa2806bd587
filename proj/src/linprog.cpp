#include "mitlsynth/linprog.hpp"

#include <cmath>
#include <limits>
#include <utility>

namespace mitlsynth::lp {

namespace {

// Tableau in the dictionary layout: rows 0..m-1 are constraints, row m the
// objective, row m+1 the phase-one objective. Column n is the artificial
// variable, column n+1 the right-hand side. basis[i] / nonbasis[j] hold
// variable ids; id -1 is the artificial variable.
class Tableau {
 public:
  Tableau(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
          const std::vector<double>& c, double tol)
      : m_(b.size()), n_(c.size()), tol_(tol), basis_(m_), nonbasis_(n_ + 1),
        d_(m_ + 2, std::vector<double>(n_ + 2, 0.0)) {
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) d_[i][j] = A[i][j];
      basis_[i] = static_cast<int>(n_ + i);
      d_[i][n_] = -1.0;
      d_[i][n_ + 1] = b[i];
    }
    for (std::size_t j = 0; j < n_; ++j) {
      nonbasis_[j] = static_cast<int>(j);
      d_[m_][j] = -c[j];
    }
    nonbasis_[n_] = -1;
    d_[m_ + 1][n_] = 1.0;
  }

  Result solve() {
    Result res;
    std::size_t r = 0;
    for (std::size_t i = 1; i < m_; ++i)
      if (d_[i][n_ + 1] < d_[r][n_ + 1]) r = i;
    if (m_ > 0 && d_[r][n_ + 1] < -tol_) {
      pivot(r, n_);
      if (!run(true) || d_[m_ + 1][n_ + 1] < -tol_) {
        res.status = Status::Infeasible;
        return res;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        if (basis_[i] != -1) continue;
        std::size_t s = 0;
        for (std::size_t j = 1; j <= n_; ++j)
          if (d_[i][j] < d_[i][s] || (d_[i][j] == d_[i][s] && nonbasis_[j] < nonbasis_[s])) s = j;
        pivot(i, s);
      }
    }
    if (!run(false)) {
      res.status = Status::Unbounded;
      return res;
    }
    res.status = Status::Optimal;
    res.x.assign(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] >= 0 && static_cast<std::size_t>(basis_[i]) < n_)
        res.x[static_cast<std::size_t>(basis_[i])] = d_[i][n_ + 1];
    res.objective = d_[m_][n_ + 1];
    return res;
  }

 private:
  void pivot(std::size_t r, std::size_t s) {
    const double inv = 1.0 / d_[r][s];
    for (std::size_t i = 0; i < m_ + 2; ++i) {
      if (i == r || d_[i][s] == 0.0) continue;
      const double f = d_[i][s] * inv;
      for (std::size_t j = 0; j < n_ + 2; ++j)
        if (j != s) d_[i][j] -= d_[r][j] * f;
    }
    for (std::size_t j = 0; j < n_ + 2; ++j)
      if (j != s) d_[r][j] *= inv;
    for (std::size_t i = 0; i < m_ + 2; ++i)
      if (i != r) d_[i][s] *= -inv;
    d_[r][s] = inv;
    std::swap(basis_[r], nonbasis_[s]);
  }

  bool run(bool phase_one) {
    const std::size_t obj = phase_one ? m_ + 1 : m_;
    // Generous cap; Dantzig pricing does not cycle on these programs in practice.
    for (int iter = 0; iter < 100000; ++iter) {
      std::size_t s = n_ + 1;
      for (std::size_t j = 0; j <= n_; ++j) {
        if (!phase_one && nonbasis_[j] == -1) continue;
        if (s == n_ + 1 || d_[obj][j] < d_[obj][s] ||
            (d_[obj][j] == d_[obj][s] && nonbasis_[j] < nonbasis_[s]))
          s = j;
      }
      if (s == n_ + 1 || d_[obj][s] > -tol_) return true;
      std::size_t r = m_;
      for (std::size_t i = 0; i < m_; ++i) {
        if (d_[i][s] < tol_) continue;
        if (r == m_) {
          r = i;
          continue;
        }
        const double lhs = d_[i][n_ + 1] / d_[i][s];
        const double rhs = d_[r][n_ + 1] / d_[r][s];
        if (lhs < rhs || (lhs == rhs && basis_[i] < basis_[r])) r = i;
      }
      if (r == m_) return false;
      pivot(r, s);
    }
    return false;
  }

  std::size_t m_, n_;
  double tol_;
  std::vector<int> basis_, nonbasis_;
  std::vector<std::vector<double>> d_;
};

}  // namespace

Result solve(const Problem& problem, double tol) {
  // Free variables are split into a nonnegative pair x = x+ - x-.
  const std::size_t n = problem.num_vars();
  std::vector<std::size_t> neg_col(n, 0);
  std::size_t cols = n;
  for (std::size_t j = 0; j < n; ++j)
    if (j < problem.free.size() && problem.free[j]) neg_col[j] = cols++;

  std::vector<std::vector<double>> A(problem.A.size(), std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < problem.A.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      A[i][j] = problem.A[i][j];
      if (neg_col[j]) A[i][neg_col[j]] = -problem.A[i][j];
    }
  std::vector<double> c(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    c[j] = problem.c[j];
    if (neg_col[j]) c[neg_col[j]] = -problem.c[j];
  }

  Tableau tab(A, problem.b, c, tol);
  Result raw = tab.solve();
  if (raw.status != Status::Optimal) return raw;
  Result out;
  out.status = Status::Optimal;
  out.objective = raw.objective;
  out.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    out.x[j] = raw.x[j];
    if (neg_col[j]) out.x[j] -= raw.x[neg_col[j]];
  }
  return out;
}

}  // namespace mitlsynth::lp
