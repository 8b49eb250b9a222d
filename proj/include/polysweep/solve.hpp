#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polysweep/transcription.hpp"

namespace polysweep {

// Which sign branch of the boundary multiplier a solver may use.
enum class EtaBranch { Any, Riding, Resting };
const char* to_string(EtaBranch branch);

struct ReducedCandidate {
  std::string label;   // active constraints of the reduced program, e.g. "eta=0" or "u2=lower"
  Vec u;               // second-segment control
  double eta_row = 0;  // multiplier against the stored unit row
  double eta_leading = 0;  // multiplier against the row scaled to unit leading coefficient
  double cost = 0;     // reduced objective phi + sum h l
  bool feasible = false;
};

struct ReducedSolution {
  Vec u_first;
  Vec u;
  double cost = 0;
  double eta_row = 0;
  double eta_leading = 0;
  std::string label;
  std::vector<ReducedCandidate> candidates;  // every KKT candidate with at most n active constraints
  DiscreteQuadruple q;                       // rollout of the optimal controls
};

// Two-step boundary-riding reduction: n = 2, m = 1, fixed row, g(x, u) = u,
// box U, linear phi, diagonal quadratic control cost, nu = 2, first control
// pinned so that x_1 lies on the boundary.  On the second step the state rides
// the boundary and J is a convex quadratic in u_1 subject to eta >= 0.
ReducedSolution solve_reduced_halfspace(const DiscreteProblem& dp, EtaBranch branch = EtaBranch::Any);

struct SolveOptions {
  int starts = 16;            // low-discrepancy starts in addition to init
  std::uint64_t seed = 0;     // rotates the start sequence
  double penalty0 = 10.0;     // quadratic penalty ladder penalty0 * 10^r up to penalty_max
  double penalty_max = 1e6;
  double step0 = 0.25;        // initial pattern step relative to the variable range
  double min_step = 1e-11;    // relative step at which a coordinate is converged
  long max_evaluations = 20000;   // per start and search phase
  double feas_tol = 1e-8;
  EtaBranch branch = EtaBranch::Any;  // Resting forces eta_j = 0 at every step
};

struct HistoryEntry {
  int start = 0;
  int round = 0;
  long evaluations = 0;
  double merit = 0;
  double cost = 0;
  double violation = 0;
  double best_feasible = 0;  // best feasible J_k so far, nonincreasing
};

struct SolveResult {
  DiscreteQuadruple q;
  CostBreakdown cost;
  ResidualReport residuals;
  std::vector<HistoryEntry> history;
  long evaluations = 0;
  int best_start = -1;   // -1 = init
  bool budget_exceeded = false;
};

// Single shooting over the controls (and the node rows and offsets of a decision
// moving set): states and multipliers come from the explicit rollout, J_k is
// minimised by projected coordinate pattern search with parabolic steps, from
// init and options.starts Halton points rotated by the seed.  State and
// localisation constraints enter through a quadratic penalty.  The result is
// the best feasible point found; ties go to the lexicographically smallest
// control vector.  Throws NoFeasibleStart when init is infeasible.
SolveResult solve_Pk(const DiscreteProblem& dp, const DiscreteQuadruple& init, const SolveOptions& options = {});

struct StudyRow {
  int nu = 0;
  bool ok = false;
  std::string status;  // "ok" or the error kind
  double cost = 0;
  W12Gap gap;
  double max_violation = 0;
  long evaluations = 0;
  double seconds = 0;
};

// For each nu: build dp, roll out the initial controls, solve and compare the
// optimum with the reference.  Errors mark the row failed.
std::vector<StudyRow> convergence_study(const std::function<DiscreteProblem(int)>& make_problem,
                                        const std::function<ControlSequence(const DiscreteProblem&)>& init_controls,
                                        const Reference& reference, const std::vector<int>& nu_list,
                                        const SolveOptions& options = {});

std::string study_csv(const std::vector<StudyRow>& rows);

}  // namespace polysweep
