#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"

using namespace polysweep;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("catching_up_step examples") {
  const SweepingProblem p = example8::problem();
  const Polyhedron c = p.set_at(0.0);
  const StepResult free_move = catching_up_step(c, c, v2(1.5, 1.0), v2(-1, -1), 0.5, p.g, StepMode::Explicit);
  CHECK((free_move.x_next - v2(1.0, 0.5)).norm() == 0.0);
  CHECK(free_move.eta.norm() == 0.0);

  const StepResult ride = catching_up_step(c, c, v2(1.0, 0.5), v2(-0.4, 0.1), 0.5, p.g, StepMode::Explicit);
  CHECK((ride.x_next - v2(0.82, 0.59)).norm() <= 1e-15);
  // Row-scale multiplier sqrt(5)/25, i.e. 1/25 against the integer normal (1, 2).
  CHECK(ride.eta(0) == doctest::Approx(std::sqrt(5.0) / 25.0).epsilon(1e-14));
  CHECK(ride.eta(0) / std::sqrt(5.0) == doctest::Approx(1.0 / 25.0).epsilon(1e-14));

  const StepResult proj = catching_up_step(c, c, v2(1.0, 0.5), v2(-0.4, 0.1), 0.5, p.g, StepMode::Projective);
  CHECK((proj.x_next - ride.x_next).norm() <= 1e-14);
  CHECK(proj.eta(0) == doctest::Approx(ride.eta(0)).epsilon(1e-12));

  const StepResult interior = catching_up_step(c, c, v2(3.0, 3.0), v2(0.2, -0.3), 0.5, p.g, StepMode::Explicit);
  CHECK((interior.x_next - v2(3.1, 2.85)).norm() <= 1e-15);
  CHECK(interior.eta.norm() == 0.0);
}

TEST_CASE("explicit step overshooting an inactive constraint fails") {
  const SweepingProblem p = example8::problem();
  const Polyhedron c = p.set_at(0.0);
  try {
    catching_up_step(c, c, v2(1.5, 1.0), v2(-1, -1), 1.0, p.g, StepMode::Explicit);
    FAIL("expected StepFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::StepFailure);
  }
}

TEST_CASE("simulate: optimal and constrained controls of the example") {
  const SweepingProblem p = example8::problem();
  const Simulation opt = simulate(p, example8::controls(2, example8::optimal_control()), Mesh::uniform(1.0, 2));
  CHECK((opt.q.x[1] - v2(1.0, 0.5)).norm() == 0.0);
  CHECK((opt.q.x[2] - v2(0.82, 0.59)).norm() <= 1e-15);
  REQUIRE(opt.q.hit_step.has_value());
  CHECK(*opt.q.hit_step == 1);
  CHECK(max_inclusion_residual(opt.q, p.g) <= 1e-14);

  const Simulation c1 = simulate(p, example8::controls(2, example8::constrained_control()), Mesh::uniform(1.0, 2));
  CHECK(std::abs(c1.q.x[2](0) + 2.0 * c1.q.x[2](1) - 2.0) <= 1e-12);
  CHECK(c1.q.eta[1](0) <= 1e-15);
}

TEST_CASE("simulate: zero perturbation keeps an interior state fixed") {
  SweepingProblem p = example8::problem();
  p.g = Perturbation::affine(Mat::Zero(2, 2), Mat::Zero(2, 2), Vec::Zero(2));
  ControlSequence c;
  for (int j = 0; j < 5; ++j) c.u.push_back(v2(0.3, -0.7));
  const Simulation s = simulate(p, c, Mesh::uniform(1.0, 5));
  for (const Vec& x : s.q.x) CHECK((x - p.x0).norm() == 0.0);
}

TEST_CASE("simulate: explicit and projective modes agree on the example") {
  const SweepingProblem p = example8::problem();
  for (int nu : {2, 4, 8, 16}) {
    const ControlSequence c = example8::controls(nu, example8::optimal_control());
    const Mesh mesh = Mesh::uniform(1.0, nu);
    const Simulation ex = simulate(p, c, mesh, {StepMode::Explicit});
    const Simulation pr = simulate(p, c, mesh, {StepMode::Projective});
    for (int j = 0; j <= nu; ++j) CHECK((ex.q.x[static_cast<std::size_t>(j)] - pr.q.x[static_cast<std::size_t>(j)]).norm() <= 1e-8);
    for (int j = 0; j <= nu; ++j) CHECK(ex.q.set(j).slack(ex.q.x[static_cast<std::size_t>(j)]).maxCoeff() <= 1e-12);
    CHECK(max_inclusion_residual(ex.q, p.g) <= 1e-8);
  }
}

TEST_CASE("simulate: lenient rollouts report violation instead of throwing") {
  const SweepingProblem p = example8::problem();
  ControlSequence c;
  c.u = {v2(-1, -1)};
  CHECK_THROWS_AS(simulate(p, c, Mesh::uniform(1.0, 1)), Error);
  SimulateOptions opt;
  opt.lenient = true;
  const Simulation s = simulate(p, c, Mesh::uniform(1.0, 1), opt);
  CHECK(s.violation > 0.1);
}

TEST_CASE("w12_distance examples") {
  const SweepingProblem p = example8::problem();
  const Mesh mesh = Mesh::uniform(1.0, 2);
  const Reference opt = Reference::from_quadruple(simulate(p, example8::controls(2, example8::optimal_control()), mesh).q);
  const Reference c1 = Reference::from_quadruple(simulate(p, example8::controls(2, example8::constrained_control()), mesh).q);
  const W12Gap same = w12_distance(opt, opt);
  CHECK(same.state == 0.0);
  CHECK(same.ab == 0.0);
  CHECK(same.u == 0.0);
  CHECK(w12_distance(opt, c1).u == doctest::Approx(1.0 / 15.0).epsilon(1e-13));

  Reference shifted = opt;
  shifted.u[1] += v2(0.3, 0.0);
  shifted.u[2] += v2(0.3, 0.0);
  CHECK(w12_distance(opt, shifted).u == doctest::Approx(0.3 * std::sqrt(0.5)).epsilon(1e-13));

  const Reference fine = Reference::from_quadruple(
      simulate(p, example8::controls(4, example8::optimal_control()), Mesh::uniform(1.0, 4)).q);
  CHECK(w12_distance(opt, fine).u <= 1e-15);
  CHECK_THROWS_AS(w12_distance(opt, fine, false), Error);
}

TEST_CASE("discretize_feasible reproduces a mesh-representable solution exactly") {
  const SweepingProblem p = example8::problem();
  const Mesh mesh = Mesh::uniform(1.0, 2);
  const DiscreteQuadruple opt = simulate(p, example8::controls(2, example8::optimal_control()), mesh).q;
  const Discretization d = discretize_feasible(p, Reference::from_quadruple(opt), mesh);
  for (int j = 0; j <= 2; ++j) CHECK((d.q.x[static_cast<std::size_t>(j)] - opt.x[static_cast<std::size_t>(j)]).norm() <= 1e-15);
  CHECK(d.q.eta[1](0) == doctest::Approx(opt.eta[1](0)).epsilon(1e-13));
  CHECK(d.diag.mu_k == 0.0);
  CHECK(d.diag.delta_k == 0.0);
  CHECK(d.diag.active_sets_match);
  CHECK(d.diag.max_eta_ratio <= 1.0);
}

TEST_CASE("discretize_feasible on an interior solution is the Euler polygon") {
  const SweepingProblem p = example8::problem();
  Reference ref;
  for (int k = 0; k <= 8; ++k) {
    const double t = k / 8.0;
    ref.t.push_back(t);
    ref.x.push_back(p.x0 + t * v2(0.5, 0.25));
    ref.xdot.push_back(v2(0.5, 0.25));
    ref.a.push_back(p.moving.a0);
    ref.adot.push_back(Mat::Zero(1, 2));
    ref.b.push_back(p.moving.b0);
    ref.bdot.push_back(Vec::Zero(1));
    ref.u.push_back(v2(0.5, 0.25));
  }
  const Discretization d = discretize_feasible(p, ref, Mesh::uniform(1.0, 4));
  for (const Vec& e : d.q.eta) CHECK(e.norm() == 0.0);
  CHECK((d.q.x.back() - (p.x0 + v2(0.5, 0.25))).norm() <= 1e-14);
  CHECK(d.diag.gap.state <= 1e-14);
}

TEST_CASE("discretize_feasible converges on a moving boundary") {
  const fixtures::Synthetic syn;
  const Reference ref = syn.reference(1 << 12);
  const SweepingProblem p = syn.problem(ref);
  double prev = -1.0;
  for (int nu : {8, 16, 32, 64}) {
    const Discretization d = discretize_feasible(p, ref, Mesh::uniform(1.0, nu));
    CHECK(d.diag.active_sets_match);
    CHECK(d.diag.max_inclusion_residual <= 1e-12);
    CHECK(d.diag.max_node_error <= d.diag.theta_k);
    CHECK(d.diag.max_eta_ratio <= 1.0 + 1e-12);
    if (prev > 0) CHECK(prev / d.diag.gap.state >= 1.5);
    prev = d.diag.gap.state;
  }
}
