#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace covkit::lp {

enum class Relation { Eq, Le, Ge };
enum class Status { Optimal, Infeasible, Unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "?";
}

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense linear program over nonnegative variables:
///   min (or max) c'x  subject to  A x {=, <=, >=} b,  x >= 0.
///
/// Solved by two-phase primal simplex with Bland's pivoting rule, which makes
/// the solver deterministic and cycle-free. Problem sizes in this project are
/// at most a few hundred rows/columns, so a dense tableau is the right tool.
class Problem {
 public:
  explicit Problem(int num_vars) : n_(num_vars) {
    if (num_vars <= 0) throw std::invalid_argument("lp::Problem: num_vars must be positive");
    objective_.assign(n_, 0.0);
  }

  void set_objective(std::vector<double> c, bool maximize = false) {
    if (c.size() != static_cast<std::size_t>(n_))
      throw std::invalid_argument("lp::Problem: objective size mismatch");
    objective_ = std::move(c);
    maximize_ = maximize;
  }

  void set_objective_coeff(int j, double v) { objective_.at(j) = v; }
  void set_maximize(bool maximize) { maximize_ = maximize; }

  void add_constraint(std::vector<double> row, Relation rel, double rhs) {
    if (row.size() != static_cast<std::size_t>(n_))
      throw std::invalid_argument("lp::Problem: constraint size mismatch");
    rows_.push_back(std::move(row));
    rels_.push_back(rel);
    rhs_.push_back(rhs);
  }

  void add_constraint(const std::vector<std::pair<int, double>>& terms, Relation rel,
                      double rhs) {
    std::vector<double> row(n_, 0.0);
    for (const auto& [j, v] : terms) row.at(j) += v;
    add_constraint(std::move(row), rel, rhs);
  }

  int num_vars() const { return n_; }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  Result solve(double tol = 1e-9) const;

 private:
  int n_;
  bool maximize_ = false;
  std::vector<double> objective_;
  std::vector<std::vector<double>> rows_;
  std::vector<Relation> rels_;
  std::vector<double> rhs_;
};

namespace detail {

class Tableau {
 public:
  // cols = structural + slack/surplus + artificial; one extra column for rhs.
  Tableau(int rows, int cols) : m_(rows), cols_(cols), t_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * (cols_ + 1) + j]; }
  double& rhs(int i) { return at(i, cols_); }
  double rhs(int i) const { return at(i, cols_); }
  // row m_ is the objective row (reduced costs; rhs holds -objective value)
  int obj_row() const { return m_; }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    const double inv = 1.0 / piv;
    for (int j = 0; j <= cols_; ++j) at(pr, j) *= inv;
    at(pr, pc) = 1.0;
    for (int i = 0; i <= m_; ++i) {
      if (i == pr) continue;
      const double f = at(i, pc);
      if (f == 0.0) continue;
      for (int j = 0; j <= cols_; ++j) at(i, j) -= f * at(pr, j);
      at(i, pc) = 0.0;
    }
  }

  int m_;
  int cols_;
  std::vector<double> t_;
};

}  // namespace detail

inline Result Problem::solve(double tol) const {
  const int m = num_rows();
  const int n = n_;

  // Column layout: [0, n) structural, [n, n + n_slack) slack/surplus,
  // [n + n_slack, total) artificial.
  int n_slack = 0;
  for (Relation r : rels_)
    if (r != Relation::Eq) ++n_slack;

  // Sign-normalize rows so every rhs is nonnegative.
  std::vector<double> sign(m, 1.0);
  std::vector<Relation> rel(rels_);
  for (int i = 0; i < m; ++i)
    if (rhs_[i] < 0.0) {
      sign[i] = -1.0;
      if (rel[i] == Relation::Le) rel[i] = Relation::Ge;
      else if (rel[i] == Relation::Ge) rel[i] = Relation::Le;
    }

  // A row needs an artificial unless its slack enters with +1 (Le rows).
  int n_art = 0;
  for (Relation r : rel)
    if (r != Relation::Le) ++n_art;

  const int total = n + n_slack + n_art;
  detail::Tableau tab(m, total);
  std::vector<int> basis(m, -1);

  int slack_at = n;
  int art_at = n + n_slack;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) tab.at(i, j) = sign[i] * rows_[i][j];
    tab.rhs(i) = sign[i] * rhs_[i];
    if (rels_[i] != Relation::Eq) {
      const double s = (rels_[i] == Relation::Le) ? 1.0 : -1.0;
      tab.at(i, slack_at) = sign[i] * s;
      if (tab.at(i, slack_at) > 0.0) basis[i] = slack_at;
      ++slack_at;
    }
    if (basis[i] < 0) {
      tab.at(i, art_at) = 1.0;
      basis[i] = art_at;
      ++art_at;
    }
  }
  const int art_begin = n + n_slack;

  const auto run_simplex = [&](int allowed_cols) -> bool {
    // Bland: entering = lowest-index column with negative reduced cost;
    // leaving = min ratio, ties by lowest basic column index.
    const long max_iter = 20000L + 500L * (m + total);
    for (long iter = 0; iter < max_iter; ++iter) {
      int enter = -1;
      for (int j = 0; j < allowed_cols; ++j)
        if (tab.at(tab.obj_row(), j) < -tol) { enter = j; break; }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = tab.at(i, enter);
        if (a > tol) {
          const double ratio = tab.rhs(i) / a;
          if (ratio < best_ratio - 1e-15 ||
              (std::abs(ratio - best_ratio) <= 1e-15 &&
               (leave < 0 || basis[i] < basis[leave]))) {
            best_ratio = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded direction
      tab.pivot(leave, enter);
      basis[leave] = enter;
    }
    throw std::runtime_error("lp: simplex iteration limit exceeded");
  };

  Result res;

  if (n_art > 0) {
    // Phase 1: minimize the sum of artificials. The objective row starts as
    // minus the sum of rows holding a basic artificial (reduced costs of the
    // basis must be zero).
    for (int i = 0; i < m; ++i)
      if (basis[i] >= art_begin)
        for (int j = 0; j <= total; ++j) tab.at(tab.obj_row(), j) -= tab.at(i, j);
    for (int j = art_begin; j < total; ++j) tab.at(tab.obj_row(), j) += 1.0;

    if (!run_simplex(total)) throw std::runtime_error("lp: phase 1 unbounded");
    const double phase1 = -tab.rhs(tab.obj_row());
    if (phase1 > 1e-7) {
      res.status = Status::Infeasible;
      return res;
    }
    // Drive leftover artificials out of the basis; a row where that is
    // impossible is redundant and can be neutralized.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < art_begin) continue;
      int pc = -1;
      for (int j = 0; j < art_begin; ++j)
        if (std::abs(tab.at(i, j)) > tol) { pc = j; break; }
      if (pc >= 0) {
        tab.pivot(i, pc);
        basis[i] = pc;
      } else {
        for (int j = 0; j <= total; ++j) tab.at(i, j) = 0.0;
        tab.at(i, basis[i]) = 1.0;  // keep the basic artificial pinned at zero
      }
    }
  }

  // Phase 2 objective row: reduced costs of the real objective.
  for (int j = 0; j <= total; ++j) tab.at(tab.obj_row(), j) = 0.0;
  for (int j = 0; j < n; ++j)
    tab.at(tab.obj_row(), j) = maximize_ ? -objective_[j] : objective_[j];
  for (int i = 0; i < m; ++i) {
    const int b = basis[i];
    const double cb = tab.at(tab.obj_row(), b);
    if (cb != 0.0)
      for (int j = 0; j <= total; ++j) tab.at(tab.obj_row(), j) -= cb * tab.at(i, j);
  }
  // Artificial columns are excluded from phase-2 pivoting.
  if (!run_simplex(art_begin)) {
    res.status = Status::Unbounded;
    return res;
  }

  res.status = Status::Optimal;
  res.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (basis[i] < n) res.x[basis[i]] = tab.rhs(i);
  double obj = 0.0;
  for (int j = 0; j < n; ++j) obj += objective_[j] * res.x[j];
  res.objective = obj;
  return res;
}

}  // namespace covkit::lp
