#pragma once

// Shared test problems.

#include <cmath>

#include "polysweep/sweeping.hpp"

namespace fixtures {

using polysweep::Mat;
using polysweep::Vec;

// Boundary-riding analytic solution: a(t) = (sin wt, cos wt), xbar(t) = (t, t^2/2),
// b(t) = <a(t), xbar(t)>, eta(t) = 1 + sin(t)/2 and ubar = xbar' + eta a, so that
// -xbar' + g(xbar, ubar) = eta a lies in the normal cone with g(x, u) = u.
struct Synthetic {
  double omega = 2.0;

  Vec a_vec(double t) const { return (Vec(2) << std::sin(omega * t), std::cos(omega * t)).finished(); }
  Vec adot_vec(double t) const { return (Vec(2) << omega * std::cos(omega * t), -omega * std::sin(omega * t)).finished(); }
  Vec x(double t) const { return (Vec(2) << t, 0.5 * t * t).finished(); }
  Vec xdot(double t) const { return (Vec(2) << 1.0, t).finished(); }
  double eta(double t) const { return 1.0 + 0.5 * std::sin(t); }
  Vec u(double t) const { return xdot(t) + eta(t) * a_vec(t); }

  polysweep::Reference reference(int cells) const {
    std::vector<double> grid;
    for (int k = 0; k <= cells; ++k) grid.push_back(static_cast<double>(k) / cells);
    grid.back() = 1.0;
    polysweep::Reference::Functions f;
    f.x = [this](double t) { return x(t); };
    f.xdot = [this](double t) { return xdot(t); };
    f.a = [this](double t) { return Mat(a_vec(t).transpose()); };
    f.adot = [this](double t) { return Mat(adot_vec(t).transpose()); };
    f.b = [this](double t) { return Vec::Constant(1, a_vec(t).dot(x(t))); };
    f.bdot = [this](double t) { return Vec::Constant(1, adot_vec(t).dot(x(t)) + a_vec(t).dot(xdot(t))); };
    f.u = [this](double t) { return u(t); };
    return polysweep::Reference::sample(grid, f);
  }

  polysweep::SweepingProblem problem(const polysweep::Reference& ref) const {
    polysweep::SweepingProblem p;
    p.name = "synthetic";
    p.n = 2;
    p.m = 1;
    p.d = 2;
    p.horizon = 1.0;
    p.x0 = x(0.0);
    p.g = polysweep::Perturbation::identity(2);
    p.controls = polysweep::ControlSet::box(Vec::Constant(2, -10.0), Vec::Constant(2, 10.0));
    p.phi = polysweep::TerminalCost::linear(Vec::Zero(2));
    p.ell.blocks[polysweep::RunningCost::U].weight = Vec::Ones(2);
    p.moving.kind = polysweep::MovingSet::Kind::Sampled;
    p.moving.a0 = ref.a.front();
    p.moving.b0 = ref.b.front();
    p.moving.times = ref.t;
    p.moving.a_samples = ref.a;
    p.moving.b_samples = ref.b;
    p.validate();
    return p;
  }
};

}  // namespace fixtures
