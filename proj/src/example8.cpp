#include "polysweep/example8.hpp"

#include <cmath>

namespace polysweep::example8 {

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

SweepingProblem problem() {
  SweepingProblem p;
  p.name = "example8";
  p.n = 2;
  p.m = 1;
  p.d = 2;
  p.horizon = 1.0;
  p.x0 = v2(1.5, 1.0);
  p.g = Perturbation::identity(2);
  p.controls = ControlSet::box(v2(-1.0, -1.0), v2(1.0, 1.0));
  p.phi = TerminalCost::linear(v2(1.0, 1.0));
  p.ell.blocks[RunningCost::U].weight = v2(1.0, 2.0);
  p.moving.kind = MovingSet::Kind::Fixed;
  p.moving.a0 = Mat(1, 2);
  p.moving.a0 << -1.0 / std::sqrt(5.0), -2.0 / std::sqrt(5.0);
  p.moving.b0 = Vec::Constant(1, -2.0 / std::sqrt(5.0));
  p.validate();
  return p;
}

Vec hitting_control() { return v2(-1.0, -1.0); }
Vec optimal_control() { return v2(-0.4, 0.1); }
Vec constrained_control() { return v2(-1.0 / 3.0, 1.0 / 6.0); }

ControlSequence controls(int nu, const Vec& second) {
  ControlSequence c;
  const Mesh mesh = Mesh::uniform(1.0, nu);
  for (int j = 0; j < nu; ++j) c.u.push_back(mesh.t[static_cast<std::size_t>(j)] < 0.5 ? hitting_control() : second);
  return c;
}

DiscreteProblem discrete(int nu) {
  DiscreteProblem dp;
  dp.base = problem();
  dp.mesh = Mesh::uniform(1.0, nu);
  dp.u0 = hitting_control();
  dp.windows.push_back({0.0, 0.5, ControlSet::finite({hitting_control()})});
  dp.validate();
  return dp;
}

}  // namespace polysweep::example8
