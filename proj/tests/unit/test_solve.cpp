#include "doctest.h"

#include <cmath>

#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"
#include "polysweep/solve.hpp"

using namespace polysweep;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

DiscreteQuadruple rollout(const DiscreteProblem& dp, const Vec& second) {
  return simulate(dp.base, example8::controls(dp.nu(), second), dp.mesh).q;
}

const ReducedCandidate& candidate(const ReducedSolution& r, const std::string& label) {
  for (const ReducedCandidate& c : r.candidates)
    if (c.label == label) return c;
  FAIL("missing candidate " << label);
  return r.candidates.front();
}

// Interior problem whose (P_k) optimum is the cell average of a smooth ubar:
// g = u, no running or terminal cost, so only the proximity term is left.
struct Interior {
  Reference reference(int cells) const {
    std::vector<double> grid;
    for (int k = 0; k <= cells; ++k) grid.push_back(static_cast<double>(k) / cells);
    Reference::Functions f;
    f.u = [](double t) { return v2(std::cos(t), std::sin(2.0 * t)); };
    f.xdot = f.u;
    f.x = [](double t) { return v2(std::sin(t), 0.5 * (1.0 - std::cos(2.0 * t))); };
    f.a = [](double) { return Mat(Mat::Identity(1, 2)); };
    f.adot = [](double) { return Mat(Mat::Zero(1, 2)); };
    f.b = [](double) { return Vec::Constant(1, 10.0); };
    f.bdot = [](double) { return Vec::Zero(1); };
    return Reference::sample(grid, f);
  }
  DiscreteProblem problem(int nu, const Reference& ref) const {
    DiscreteProblem dp;
    dp.base.name = "interior";
    dp.base.n = 2;
    dp.base.m = 1;
    dp.base.d = 2;
    dp.base.x0 = Vec::Zero(2);
    dp.base.g = Perturbation::identity(2);
    dp.base.controls = ControlSet::box(v2(-2, -2), v2(2, 2));
    dp.base.phi = TerminalCost::linear(Vec::Zero(2));
    dp.base.moving.a0 = Mat::Identity(1, 2);
    dp.base.moving.b0 = Vec::Constant(1, 10.0);
    dp.mesh = Mesh::uniform(1.0, nu);
    dp.reference = ref;
    dp.validate();
    return dp;
  }
};

}  // namespace

TEST_CASE("reduced halfspace program of the example") {
  const ReducedSolution r = solve_reduced_halfspace(example8::discrete(2));
  CHECK(r.label == "stationary");
  CHECK((r.u - v2(-0.4, 0.1)).norm() <= 1e-15);
  CHECK(r.cost == doctest::Approx(441.0 / 200.0).epsilon(1e-15));
  CHECK(std::abs(r.eta_leading - 1.0 / 25.0) <= 1e-15);
  CHECK(std::abs(r.eta_row - std::sqrt(5.0) / 25.0) <= 1e-15);
  CHECK((r.q.x[2] - v2(0.82, 0.59)).norm() <= 1e-15);
  CHECK(std::abs(r.q.eta[1](0) - r.eta_row) <= 1e-15);

  const ReducedCandidate& rest = candidate(r, "eta=0");
  CHECK((rest.u - v2(-1.0 / 3.0, 1.0 / 6.0)).norm() <= 1e-15);
  CHECK(std::abs(rest.cost - 53.0 / 24.0) <= 1e-15);
  const ReducedCandidate& low2 = candidate(r, "u2=lower");
  CHECK((low2.u - v2(-0.4, -1.0)).norm() <= 1e-15);
  CHECK(std::abs(low2.eta_leading - 12.0 / 25.0) <= 1e-15);
  CHECK(std::abs(low2.cost - 2.81) <= 1e-14);
  const ReducedCandidate& low1 = candidate(r, "u1=lower");
  CHECK((low1.u - v2(-1.0, 0.1)).norm() <= 1e-15);
  CHECK(std::abs(low1.eta_leading - 4.0 / 25.0) <= 1e-15);
  CHECK(std::abs(low1.cost - 2.295) <= 1e-14);
  CHECK(!candidate(r, "u2=upper").feasible);

  const ReducedSolution rs = solve_reduced_halfspace(example8::discrete(2), EtaBranch::Resting);
  CHECK((rs.u - v2(-1.0 / 3.0, 1.0 / 6.0)).norm() <= 1e-15);
  CHECK(std::abs(rs.cost - 53.0 / 24.0) <= 1e-15);
  CHECK(rs.eta_row == doctest::Approx(0.0));
}

TEST_CASE("reduced program rejects other families") {
  auto expect_mismatch = [](const DiscreteProblem& dp) {
    try {
      solve_reduced_halfspace(dp);
      FAIL("expected FamilyMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::FamilyMismatch);
    }
  };
  expect_mismatch(example8::discrete(4));
  DiscreteProblem with_ref = example8::discrete(2);
  with_ref.reference = Reference::from_quadruple(rollout(with_ref, example8::optimal_control()));
  expect_mismatch(with_ref);
  DiscreteProblem short_pin = example8::discrete(2);
  short_pin.u0 = v2(-0.5, -0.5);
  short_pin.windows.clear();
  expect_mismatch(short_pin);
}

TEST_CASE("solve_Pk reproduces the reduced optimum on nu = 2") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple init = rollout(dp, example8::constrained_control());
  SolveOptions opt;
  opt.seed = 42;
  const SolveResult s = solve_Pk(dp, init, opt);
  const ReducedSolution r = solve_reduced_halfspace(dp);
  CHECK((s.q.u[1] - r.u).norm() <= 1e-6);
  // The Newton polish goes well past the sqrt(eps) floor of cost comparisons.
  CHECK((s.q.u[1] - r.u).norm() <= 1e-10);
  CHECK(std::abs(s.cost.total - r.cost) <= 1e-9);
  CHECK(s.residuals.max_violation <= 1e-8);
  CHECK(!s.budget_exceeded);

  double prev = s.history.front().best_feasible;
  for (const HistoryEntry& h : s.history) {
    CHECK(h.best_feasible <= prev);
    prev = h.best_feasible;
  }

  const SolveResult again = solve_Pk(dp, init, opt);
  CHECK(again.q.u[1](0) == s.q.u[1](0));
  CHECK(again.q.u[1](1) == s.q.u[1](1));
  CHECK(again.cost.total == s.cost.total);
  CHECK(again.history.size() == s.history.size());
  CHECK(again.evaluations == s.evaluations);

  opt.branch = EtaBranch::Resting;
  const SolveResult rest = solve_Pk(dp, init, opt);
  CHECK((rest.q.u[1] - v2(-1.0 / 3.0, 1.0 / 6.0)).norm() <= 1e-6);
  CHECK(std::abs(rest.cost.total - 53.0 / 24.0) <= 1e-9);
  CHECK(rest.q.eta[1].norm() <= 1e-8);
}

TEST_CASE("solve_Pk trivial and singleton problems") {
  DiscreteProblem dp;
  dp.base.n = 2;
  dp.base.m = 1;
  dp.base.d = 2;
  dp.base.x0 = Vec::Zero(2);
  dp.base.g = Perturbation::affine(Mat::Zero(2, 2), Mat::Zero(2, 2), Vec::Zero(2));
  dp.base.controls = ControlSet::box(v2(-1, -1), v2(1, 1));
  dp.base.phi = TerminalCost::linear(Vec::Zero(2));
  dp.base.ell.blocks[RunningCost::U].weight = v2(2.0, 2.0);
  dp.base.moving.a0 = Mat::Identity(1, 2);
  dp.base.moving.b0 = Vec::Constant(1, 1.0);
  dp.mesh = Mesh::uniform(1.0, 4);
  dp.validate();
  ControlSequence cs;
  cs.u.assign(4, v2(0.5, -0.7));
  const DiscreteQuadruple init = simulate(dp.base, cs, dp.mesh).q;
  const SolveResult s = solve_Pk(dp, init);
  for (const Vec& u : s.q.u) CHECK(u.norm() <= 1e-6);
  CHECK(s.cost.total <= 1e-12);

  DiscreteProblem single = example8::discrete(4);
  single.windows.push_back({0.5, 1.0, ControlSet::finite({example8::optimal_control()})});
  const DiscreteQuadruple sinit = rollout(single, example8::optimal_control());
  const SolveResult ss = solve_Pk(single, sinit);
  for (int j = 2; j < 4; ++j) CHECK((ss.q.u[static_cast<std::size_t>(j)] - example8::optimal_control()).norm() == 0.0);
  CHECK(std::abs(ss.cost.total - 2.205) <= 1e-12);
}

TEST_CASE("solve_Pk rejects an infeasible init") {
  const DiscreteProblem dp = example8::discrete(2);
  DiscreteQuadruple init = rollout(dp, example8::optimal_control());
  init.u[1] = v2(2.0, 0.0);
  try {
    solve_Pk(dp, init);
    FAIL("expected NoFeasibleStart");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoFeasibleStart);
  }
}

TEST_CASE("solve_Pk with a decision moving set stays feasible") {
  DiscreteProblem dp;
  dp.base.n = 2;
  dp.base.m = 1;
  dp.base.d = 2;
  dp.base.x0 = Vec::Zero(2);
  dp.base.g = Perturbation::identity(2);
  dp.base.controls = ControlSet::box(v2(-1, -1), v2(1, 1));
  dp.base.phi = TerminalCost::linear(v2(-1.0, 0.0));
  dp.base.ell.blocks[RunningCost::U].weight = v2(1.0, 1.0);
  dp.base.ell.blocks[RunningCost::BDot].weight = Vec::Constant(1, 4.0);
  dp.base.ell.blocks[RunningCost::ADot].weight = Vec::Constant(2, 1.0);
  dp.base.moving.kind = MovingSet::Kind::Decision;
  dp.base.moving.a0 = Mat::Identity(1, 2);
  dp.base.moving.b0 = Vec::Zero(1);
  dp.base.moving.band_delta = 0.1;
  dp.delta_k = 0.1;
  dp.mesh = Mesh::uniform(1.0, 2);
  dp.u0 = Vec::Zero(2);
  dp.validate();
  ControlSequence cs;
  cs.u.assign(2, Vec::Zero(2));
  cs.a.assign(3, dp.base.moving.a0);
  cs.b.assign(3, dp.base.moving.b0);
  const DiscreteQuadruple init = simulate(dp.base, cs, dp.mesh).q;
  SolveOptions opt;
  opt.starts = 4;
  const SolveResult s = solve_Pk(dp, init, opt);
  CHECK(s.residuals.max_violation <= 1e-8);
  CHECK(s.cost.total < cost_Jk(dp, init).total - 1e-3);
  // Moving the offset outwards lets the state follow the terminal gradient.
  CHECK(s.q.b[2](0) > 0.0);
  CHECK(s.q.x[2](0) > 0.0);
}

TEST_CASE("convergence_study on the example and on an interior problem") {
  const Reference ref = Reference::from_quadruple(rollout(example8::discrete(16), example8::optimal_control()));
  SolveOptions opt;
  opt.starts = 4;
  const std::vector<StudyRow> rows = convergence_study(
      [](int nu) { return example8::discrete(nu); },
      [](const DiscreteProblem& dp) { return example8::controls(dp.nu(), example8::constrained_control()); }, ref, {2, 4},
      opt);
  REQUIRE(rows.size() == 2);
  for (const StudyRow& r : rows) {
    CHECK(r.ok);
    CHECK(std::abs(r.cost - 2.205) <= 1e-6);
    CHECK(r.gap.state <= 1e-6);
    CHECK(r.gap.u <= 1e-6);
  }
  const std::string csv = study_csv(rows);
  CHECK(csv.rfind("nu,status,cost,gap_state,gap_ab,gap_u,max_violation,evaluations,seconds\n", 0) == 0);

  const std::vector<StudyRow> bad = convergence_study(
      [](int nu) { return example8::discrete(nu); },
      [](const DiscreteProblem& dp) {
        ControlSequence c = example8::controls(dp.nu(), example8::optimal_control());
        c.u.back() = v2(5.0, 5.0);
        return c;
      },
      ref, {2}, opt);
  CHECK(!bad.front().ok);
  CHECK(bad.front().status == "NoFeasibleStart");

  const Interior in;
  const Reference iref = in.reference(256);
  std::vector<double> ugaps;
  const std::vector<StudyRow> irows = convergence_study(
      [&](int nu) { return in.problem(nu, iref); },
      [&](const DiscreteProblem& dp) {
        ControlSequence c;
        for (int j = 0; j < dp.nu(); ++j) c.u.push_back(iref.u_at(dp.mesh.t[static_cast<std::size_t>(j)]));
        return c;
      },
      iref, {2, 4, 8}, opt);
  for (const StudyRow& r : irows) {
    INFO(r.status);
    CHECK(r.ok);
    ugaps.push_back(r.gap.u);
  }
  CHECK(ugaps[1] < ugaps[0]);
  CHECK(ugaps[2] < ugaps[1]);
}
