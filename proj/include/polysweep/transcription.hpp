#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polysweep/sweeping.hpp"

namespace polysweep {

// Control set replacing U on the nodes t_j in [t0, t1).
struct ControlWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  ControlSet set;
};

// The discrete problem (P_k) on a mesh.
struct DiscreteProblem {
  SweepingProblem base;
  Mesh mesh;
  std::optional<Reference> reference;  // local minimiser being approximated
  double epsilon = 1.0;                // localisation radius
  double delta_k = 0.0;                // row norm band half-width (decision rows)
  std::optional<Vec> u0;               // pinned initial control, default ubar(0)
  std::vector<ControlWindow> windows;
  StepMode mode = StepMode::Explicit;
  double tol = 1e-9;

  int nu() const { return mesh.nu(); }
  const ControlSet& control_set(int j) const;
  std::optional<Vec> pinned_u0() const;
  void validate() const;
};

struct CostBreakdown {
  double terminal = 0.0;
  double running = 0.0;
  double proximity = 0.0;
  double total = 0.0;
};

CostBreakdown cost_Jk(const DiscreteProblem& dp, const DiscreteQuadruple& q);

struct ResidualReport {
  std::vector<double> inclusion;     // per step
  std::vector<double> support;       // per step: largest eta on an inactive row or negative eta
  std::vector<double> state;         // per node: positive part of the largest slack
  double endpoint = 0.0;             // positive part of the largest slack at x_nu
  double ini_x = 0.0, ini_a = 0.0, ini_b = 0.0, ini_u = 0.0;
  double ic1 = 0.0, ic2 = 0.0;       // localisation sums
  double ic1_margin = 0.0, ic2_margin = 0.0;  // eps/2 - sum
  std::vector<double> control;       // per step distance-like violation of u_j in U
  std::vector<double> band;          // per node: largest row-norm band violation
  double max_violation = 0.0;

  bool feasible(double tol) const { return max_violation <= tol; }
};

ResidualReport feasibility_residuals(const DiscreteProblem& dp, const DiscreteQuadruple& q);

struct ThetaTerms {
  std::vector<Vec> u, x, a, b;  // per step; a flattened row-major
};

ThetaTerms theta_terms(const DiscreteProblem& dp, const DiscreteQuadruple& q);

}  // namespace polysweep
