#pragma once

#include <Eigen/Dense>

#include <vector>

namespace polysweep {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Default activity tolerance 1e-9 * (1 + |x| + |b|).
inline double scaled_tolerance(const Vec& x, const Vec& b) {
  return 1e-9 * (1.0 + x.norm() + b.norm());
}

// Row-major flattening of an m x n matrix into R^{mn}, i.e. (a_1, ..., a_m).
inline Vec flatten_rows(const Mat& a) {
  Vec out(a.size());
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.segment(i * a.cols(), a.cols()) = a.row(i).transpose();
  return out;
}

inline Mat unflatten_rows(const Vec& v, Eigen::Index m, Eigen::Index n) {
  Mat out(m, n);
  for (Eigen::Index i = 0; i < m; ++i) out.row(i) = v.segment(i * n, n).transpose();
  return out;
}

}  // namespace polysweep
