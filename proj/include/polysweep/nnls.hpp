#pragma once

#include "polysweep/types.hpp"

namespace polysweep {

struct NnlsResult {
  Vec x;
  double residual = 0.0;  // ||M x - v||
  int iterations = 0;
  bool converged = true;
};

// Lawson-Hanson active-set method for min ||M x - v|| subject to x >= 0.
NnlsResult nnls(const Mat& m, const Vec& v, int max_iterations = 0);

// Same fit, but among all nonnegative x attaining the optimal residual the one
// of least Euclidean norm.  Differs from nnls() only when columns are
// linearly dependent.
NnlsResult nnls_min_norm(const Mat& m, const Vec& v);

}  // namespace polysweep
