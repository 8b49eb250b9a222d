#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "polysweep/types.hpp"

namespace polysweep::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(Status status);

// Sparse row builder for
//   minimize    c^T x
//   subject to  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
// Bounds may be infinite.  Equal row bounds give an equality row.
class Problem {
 public:
  using Entry = std::pair<int, double>;

  int add_variable(double lower, double upper, double cost = 0.0);
  int add_variables(int count, double lower, double upper);
  void add_row(std::vector<Entry> entries, double lower, double upper);
  void set_cost(int var, double cost) { cost_[static_cast<std::size_t>(var)] = cost; }
  void set_bounds(int var, double lower, double upper);

  int num_variables() const { return static_cast<int>(cost_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  const std::vector<double>& cost() const { return cost_; }
  const std::vector<double>& col_lower() const { return col_lower_; }
  const std::vector<double>& col_upper() const { return col_upper_; }
  const std::vector<std::vector<Entry>>& rows() const { return rows_; }
  const std::vector<double>& row_lower() const { return row_lower_; }
  const std::vector<double>& row_upper() const { return row_upper_; }

  // Largest bound/row violation of x (0 when feasible).
  double max_violation(const Vec& x) const;
  double objective(const Vec& x) const;

 private:
  std::vector<double> cost_, col_lower_, col_upper_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<double> row_lower_, row_upper_;
};

struct Options {
  int max_iterations = 50000;
  double feasibility_tol = 1e-9;
  double pivot_tol = 1e-11;
};

struct Result {
  Status status = Status::IterationLimit;
  Vec x;
  double objective = 0.0;
};

// Dense two-phase primal simplex.  Dantzig pricing switches to Bland's rule
// after a run of degenerate pivots, so the method terminates.  The final basic
// solution is recomputed from the original data with an LU solve.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace polysweep::lp
