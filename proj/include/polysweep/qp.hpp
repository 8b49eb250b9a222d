#pragma once

#include <vector>

#include "polysweep/types.hpp"

namespace polysweep {

// Euclidean projection of y onto {z : E z = e, G z <= g}.
struct ProjectionQp {
  Mat e_mat;  // k x n, may be empty
  Vec e_rhs;
  Mat g_mat;  // m x n, may be empty
  Vec g_rhs;
};

struct ProjectionResult {
  Vec z;
  Vec ineq_multipliers;  // >= 0, complementary to G z <= g
  Vec eq_multipliers;    // for the independent equality rows kept
  std::vector<int> working_set;
  int iterations = 0;
};

// Primal active-set method started from an LP-feasible point.  Constraints
// leave the working set in smallest-index order among negative multipliers and
// ties in the ratio test go to the smallest index.  Throws EmptyPolyhedron when
// the feasible set is empty.
ProjectionResult project_onto(const ProjectionQp& qp, const Vec& y, double tol = 1e-12);

}  // namespace polysweep
