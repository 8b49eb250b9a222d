#include "polysweep/lp.hpp"

#include <algorithm>
#include <cmath>

#include "polysweep/errors.hpp"

namespace polysweep::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

int Problem::add_variable(double lower, double upper, double cost) {
  if (lower > upper) throw Error(ErrorKind::InvalidArgument, "variable lower bound exceeds upper bound");
  cost_.push_back(cost);
  col_lower_.push_back(lower);
  col_upper_.push_back(upper);
  return static_cast<int>(cost_.size()) - 1;
}

int Problem::add_variables(int count, double lower, double upper) {
  const int first = num_variables();
  for (int k = 0; k < count; ++k) add_variable(lower, upper);
  return first;
}

void Problem::set_bounds(int var, double lower, double upper) {
  col_lower_[static_cast<std::size_t>(var)] = lower;
  col_upper_[static_cast<std::size_t>(var)] = upper;
}

void Problem::add_row(std::vector<Entry> entries, double lower, double upper) {
  for (const auto& [idx, coef] : entries) {
    if (idx < 0 || idx >= num_variables()) throw Error(ErrorKind::InvalidArgument, "row refers to unknown variable");
    (void)coef;
  }
  rows_.push_back(std::move(entries));
  row_lower_.push_back(lower);
  row_upper_.push_back(upper);
}

double Problem::objective(const Vec& x) const {
  double f = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) f += cost_[j] * x(static_cast<Eigen::Index>(j));
  return f;
}

double Problem::max_violation(const Vec& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < cost_.size(); ++j) {
    const double v = x(static_cast<Eigen::Index>(j));
    worst = std::max({worst, col_lower_[j] - v, v - col_upper_[j]});
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double s = 0.0;
    for (const auto& [idx, coef] : rows_[r]) s += coef * x(idx);
    worst = std::max({worst, row_lower_[r] - s, s - row_upper_[r]});
  }
  return worst;
}

namespace {

// Original variable j equals offset + sum(sign * y_col) over its columns.
struct VarMap {
  double offset = 0.0;
  std::vector<std::pair<int, double>> cols;
};

struct StandardForm {
  Mat a;             // rows x structural+slack columns
  Vec b;             // >= 0
  Vec c;             // phase-II costs on structural+slack columns
  std::vector<int> initial_basis;  // -1 where an artificial is needed
  std::vector<VarMap> vars;
  double cost_offset = 0.0;
};

StandardForm to_standard_form(const Problem& p) {
  StandardForm sf;
  const int nv = p.num_variables();
  sf.vars.resize(static_cast<std::size_t>(nv));
  int ncols = 0;
  std::vector<std::pair<int, double>> upper_rows;  // (column, bound) rows y <= bound
  for (int j = 0; j < nv; ++j) {
    const double lo = p.col_lower()[static_cast<std::size_t>(j)];
    const double hi = p.col_upper()[static_cast<std::size_t>(j)];
    VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 0.0) {
      vm.offset = lo;
    } else if (std::isfinite(lo)) {
      vm.offset = lo;
      vm.cols.push_back({ncols, 1.0});
      if (std::isfinite(hi)) upper_rows.push_back({ncols, hi - lo});
      ++ncols;
    } else if (std::isfinite(hi)) {
      vm.offset = hi;
      vm.cols.push_back({ncols++, -1.0});
    } else {
      vm.cols.push_back({ncols++, 1.0});
      vm.cols.push_back({ncols++, -1.0});
    }
  }
  const int structural = ncols;

  struct RowSpec {
    std::vector<std::pair<int, double>> coef;
    double rhs;
    int slack_sign;  // +1 (<=), -1 (>=), 0 (=)
  };
  std::vector<RowSpec> specs;
  for (int r = 0; r < p.num_rows(); ++r) {
    std::vector<std::pair<int, double>> coef;
    double shift = 0.0;
    for (const auto& [idx, a] : p.rows()[static_cast<std::size_t>(r)]) {
      const VarMap& vm = sf.vars[static_cast<std::size_t>(idx)];
      shift += a * vm.offset;
      for (const auto& [col, sign] : vm.cols) coef.push_back({col, a * sign});
    }
    const double lo = p.row_lower()[static_cast<std::size_t>(r)];
    const double hi = p.row_upper()[static_cast<std::size_t>(r)];
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-14 * (1.0 + std::abs(lo))) {
      specs.push_back({coef, lo - shift, 0});
      continue;
    }
    if (std::isfinite(hi)) specs.push_back({coef, hi - shift, +1});
    if (std::isfinite(lo)) specs.push_back({coef, lo - shift, -1});
  }
  for (const auto& [col, bound] : upper_rows) specs.push_back({{{col, 1.0}}, bound, +1});

  int nslack = 0;
  for (const auto& s : specs) nslack += s.slack_sign != 0 ? 1 : 0;
  const int rows = static_cast<int>(specs.size());
  sf.a = Mat::Zero(rows, structural + nslack);
  sf.b = Vec::Zero(rows);
  sf.initial_basis.assign(static_cast<std::size_t>(rows), -1);
  int slack_col = structural;
  for (int r = 0; r < rows; ++r) {
    const RowSpec& s = specs[static_cast<std::size_t>(r)];
    for (const auto& [col, a] : s.coef) sf.a(r, col) += a;
    sf.b(r) = s.rhs;
    int sc = -1;
    if (s.slack_sign != 0) {
      sc = slack_col++;
      sf.a(r, sc) = s.slack_sign;
    }
    if (sf.b(r) < 0.0) {
      sf.a.row(r) *= -1.0;
      sf.b(r) *= -1.0;
    }
    if (sc >= 0 && sf.a(r, sc) > 0.0) sf.initial_basis[static_cast<std::size_t>(r)] = sc;
  }
  sf.c = Vec::Zero(structural + nslack);
  for (int j = 0; j < nv; ++j) {
    const double cj = p.cost()[static_cast<std::size_t>(j)];
    const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    sf.cost_offset += cj * vm.offset;
    for (const auto& [col, sign] : vm.cols) sf.c(col) += cj * sign;
  }
  return sf;
}

class Tableau {
 public:
  Tableau(const StandardForm& sf, const Options& opt) : opt_(opt) {
    rows_ = static_cast<int>(sf.a.rows());
    ncols_ = static_cast<int>(sf.a.cols());
    int nart = 0;
    for (int b : sf.initial_basis) nart += b < 0 ? 1 : 0;
    total_ = ncols_ + nart;
    t_ = Mat::Zero(rows_ + 1, total_ + 1);
    t_.block(0, 0, rows_, ncols_) = sf.a;
    t_.block(0, total_, rows_, 1) = sf.b;
    basis_.assign(static_cast<std::size_t>(rows_), -1);
    int art = ncols_;
    for (int r = 0; r < rows_; ++r) {
      int b = sf.initial_basis[static_cast<std::size_t>(r)];
      if (b < 0) {
        b = art++;
        t_(r, b) = 1.0;
      }
      basis_[static_cast<std::size_t>(r)] = b;
    }
    scale_ = 1.0 + (sf.b.size() ? sf.b.cwiseAbs().maxCoeff() : 0.0);
  }

  bool is_artificial(int col) const { return col >= ncols_; }
  int rows() const { return rows_; }
  int structural_cols() const { return ncols_; }
  const std::vector<int>& basis() const { return basis_; }
  double rhs(int r) const { return t_(r, total_); }
  double value_in_basis(int col) const {
    for (int r = 0; r < rows_; ++r)
      if (basis_[static_cast<std::size_t>(r)] == col) return t_(r, total_);
    return 0.0;
  }

  // Installs objective row for the given column costs.
  void set_objective(const Vec& cost) {
    t_.row(rows_).setZero();
    for (int j = 0; j < total_; ++j) t_(rows_, j) = cost(j);
    for (int r = 0; r < rows_; ++r) {
      const double cb = cost(basis_[static_cast<std::size_t>(r)]);
      if (cb != 0.0) t_.row(rows_) -= cb * t_.row(r);
    }
  }

  double objective_value() const { return -t_(rows_, total_); }

  Status run(bool allow_artificial, int& iterations) {
    int degenerate_run = 0;
    while (iterations < opt_.max_iterations) {
      ++iterations;
      const bool bland = degenerate_run > 30;
      int enter = -1;
      double best = -opt_.feasibility_tol * 1e-1;
      for (int j = 0; j < total_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        const double d = t_(rows_, j);
        if (bland) {
          if (d < -1e-10) {
            enter = j;
            break;
          }
        } else if (d < best) {
          best = d;
          enter = j;
        }
      }
      if (enter < 0) return Status::Optimal;
      int leave = -1;
      double ratio = 0.0;
      for (int r = 0; r < rows_; ++r) {
        const double a = t_(r, enter);
        if (a <= opt_.pivot_tol) continue;
        const double q = std::max(0.0, t_(r, total_)) / a;
        if (leave < 0 || q < ratio - 1e-12 ||
            (q <= ratio + 1e-12 && basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = r;
          ratio = q;
        }
      }
      if (leave < 0) return Status::Unbounded;
      degenerate_run = ratio * scale_ <= 1e-12 * scale_ ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
    return Status::IterationLimit;
  }

  // After phase I: move artificials out of the basis where possible.
  void expel_artificials() {
    for (int r = 0; r < rows_; ++r) {
      if (!is_artificial(basis_[static_cast<std::size_t>(r)])) continue;
      int col = -1;
      double best = opt_.pivot_tol * 10;
      for (int j = 0; j < ncols_; ++j) {
        if (std::abs(t_(r, j)) > best) {
          best = std::abs(t_(r, j));
          col = j;
        }
      }
      if (col >= 0) pivot(r, col);
    }
  }

 private:
  void pivot(int r, int c) {
    t_.row(r) /= t_(r, c);
    for (int i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  Options opt_;
  int rows_ = 0, ncols_ = 0, total_ = 0;
  double scale_ = 1.0;
  Mat t_;
  std::vector<int> basis_;
};

}  // namespace

Result solve(const Problem& problem, const Options& options) {
  Result result;
  const StandardForm sf = to_standard_form(problem);
  Tableau tab(sf, options);
  int iterations = 0;
  const int total = static_cast<int>(sf.a.cols()) + [&] {
    int n = 0;
    for (int b : sf.initial_basis) n += b < 0 ? 1 : 0;
    return n;
  }();

  Vec phase1 = Vec::Zero(total);
  for (int j = static_cast<int>(sf.a.cols()); j < total; ++j) phase1(j) = 1.0;
  if (total > sf.a.cols()) {
    tab.set_objective(phase1);
    const Status s = tab.run(true, iterations);
    if (s == Status::IterationLimit) {
      result.status = s;
      return result;
    }
    const double scale = 1.0 + (sf.b.size() ? sf.b.cwiseAbs().maxCoeff() : 0.0);
    if (tab.objective_value() > options.feasibility_tol * scale) {
      result.status = Status::Infeasible;
      return result;
    }
    tab.expel_artificials();
  }

  Vec phase2 = Vec::Zero(total);
  phase2.head(sf.c.size()) = sf.c;
  tab.set_objective(phase2);
  const Status s = tab.run(false, iterations);
  result.status = s;
  if (s != Status::Optimal) return result;

  // Basic solution from the tableau, then refined by a direct solve with the
  // original columns of the final basis.
  const int ncols = static_cast<int>(sf.a.cols());
  Vec y = Vec::Zero(ncols);
  for (int r = 0; r < tab.rows(); ++r) {
    const int col = tab.basis()[static_cast<std::size_t>(r)];
    if (col < ncols) y(col) = std::max(0.0, tab.rhs(r));
  }
  {
    const int m = tab.rows();
    Mat basis_mat = Mat::Zero(m, m);
    bool usable = m > 0;
    for (int r = 0; r < m && usable; ++r) {
      const int col = tab.basis()[static_cast<std::size_t>(r)];
      if (col < ncols) {
        basis_mat.col(r) = sf.a.col(col);
      } else {
        usable = false;  // redundant row still carries an artificial
      }
    }
    if (usable) {
      Eigen::PartialPivLU<Mat> lu(basis_mat);
      if (std::abs(lu.determinant()) > 1e-300) {
        const Vec yb = lu.solve(sf.b);
        if (yb.allFinite() && (basis_mat * yb - sf.b).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + sf.b.cwiseAbs().maxCoeff()) &&
            yb.minCoeff() >= -1e-9) {
          Vec refined = Vec::Zero(ncols);
          for (int r = 0; r < m; ++r) refined(tab.basis()[static_cast<std::size_t>(r)]) = std::max(0.0, yb(r));
          y = refined;
        }
      }
    }
  }

  result.x = Vec::Zero(problem.num_variables());
  for (int j = 0; j < problem.num_variables(); ++j) {
    const VarMap& vm = sf.vars[static_cast<std::size_t>(j)];
    double v = vm.offset;
    for (const auto& [col, sign] : vm.cols) v += sign * y(col);
    result.x(j) = v;
  }
  result.objective = problem.objective(result.x);
  return result;
}

}  // namespace polysweep::lp
