#pragma once

#include "polysweep/transcription.hpp"

namespace polysweep::example8 {

// Planar example: n = 2, m = 1, T = 1, x0 = (3/2, 1), the fixed halfspace
// x1 + 2 x2 >= 2 stored with the unit row a = -(1, 2)/sqrt(5), g(x, u) = u,
// U = [-1, 1]^2, phi(x) = x1 + x2 and l = u1^2/2 + u2^2.
SweepingProblem problem();

Vec hitting_control();        // (-1, -1) on [0, 1/2)
Vec optimal_control();        // (-2/5, 1/10) on [1/2, 1]
Vec constrained_control();    // (-1/3, 1/6), the eta = 0 branch

// Piecewise-constant controls switching at t = 1/2 on a uniform nu mesh.
ControlSequence controls(int nu, const Vec& second);

// (P_k) on a uniform nu mesh without proximity terms: the costs the example
// reports are phi + sum h l.  The hitting analysis fixes the control to
// (-1, -1) on [0, 1/2), encoded as a control window.
DiscreteProblem discrete(int nu);

}  // namespace polysweep::example8
