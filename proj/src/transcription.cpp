#include "polysweep/transcription.hpp"

#include <algorithm>
#include <cmath>

#include "polysweep/errors.hpp"

namespace polysweep {

const ControlSet& DiscreteProblem::control_set(int j) const {
  const double tj = mesh.t[static_cast<std::size_t>(j)];
  for (const ControlWindow& w : windows)
    if (tj >= w.t0 && tj < w.t1) return w.set;
  return base.controls;
}

std::optional<Vec> DiscreteProblem::pinned_u0() const {
  if (u0) return u0;
  if (reference) return reference->u.front();
  return std::nullopt;
}

void DiscreteProblem::validate() const {
  base.validate();
  mesh.validate();
  if (std::abs(mesh.t.back() - base.horizon) > 1e-12 * (1.0 + base.horizon))
    throw Error(ErrorKind::MeshMismatch, "mesh does not end at the final time");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (!(delta_k >= 0.0)) throw Error(ErrorKind::InvalidArgument, "delta_k must be nonnegative");
  if (reference) {
    reference->validate();
    if (std::abs(reference->t.back() - base.horizon) > 1e-12 * (1.0 + base.horizon))
      throw Error(ErrorKind::MeshMismatch, "reference does not end at the final time");
  }
  if (u0 && u0->size() != base.d) throw Error(ErrorKind::DimensionMismatch, "pinned control has wrong length");
  for (const ControlWindow& w : windows)
    if (w.set.d() != base.d) throw Error(ErrorKind::DimensionMismatch, "window control set has wrong dimension");
}

namespace {

void check_shape(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  const int nu = dp.nu();
  if (!(q.mesh == dp.mesh)) throw Error(ErrorKind::MeshMismatch, "quadruple lives on a different mesh");
  if (static_cast<int>(q.x.size()) != nu + 1 || static_cast<int>(q.a.size()) != nu + 1 ||
      static_cast<int>(q.b.size()) != nu + 1 || static_cast<int>(q.u.size()) != nu || static_cast<int>(q.eta.size()) != nu)
    throw Error(ErrorKind::DimensionMismatch, "quadruple arrays do not match the mesh");
}

}  // namespace

CostBreakdown cost_Jk(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  check_shape(dp, q);
  CostBreakdown c;
  const int nu = dp.nu();
  c.terminal = dp.base.phi.eval(q.x.back());
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double h = dp.mesh.h(j);
    const Vec xd = q.velocity(j), ad = q.adot(j), bd = q.bdot(j);
    c.running += h * dp.base.ell.eval(q.x[k], flatten_rows(q.a[k]), q.b[k], q.u[k], xd, ad, bd);
    if (dp.reference) {
      const Reference& r = *dp.reference;
      double s = 0.0;
      r.for_each_overlap(dp.mesh.t[k], dp.mesh.t[k + 1], [&](int cell, double len) {
        const auto i = static_cast<std::size_t>(cell);
        s += len * ((xd - r.xdot[i]).squaredNorm() + (ad - flatten_rows(r.adot[i])).squaredNorm() +
                    (bd - r.bdot[i]).squaredNorm() + (q.u[k] - r.u[i]).squaredNorm());
      });
      c.proximity += 0.5 * s;
    }
  }
  c.total = c.terminal + c.running + c.proximity;
  return c;
}

ResidualReport feasibility_residuals(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  check_shape(dp, q);
  ResidualReport r;
  const int nu = dp.nu();
  const SweepingProblem& p = dp.base;
  double worst = 0.0;
  auto track = [&](double v) {
    worst = std::max(worst, v);
    return v;
  };
  for (int j = 0; j <= nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec s = q.a[k] * q.x[k] - q.b[k];
    r.state.push_back(track(std::max(0.0, s.maxCoeff())));
    double band = 0.0;
    if (p.moving.kind == MovingSet::Kind::Decision) {
      for (Eigen::Index i = 0; i < q.a[k].rows(); ++i) {
        const double nr = q.a[k].row(i).norm();
        band = std::max({band, (1.0 - dp.delta_k) - nr, nr - (1.0 + dp.delta_k)});
      }
    } else {
      // Prescribed rows must follow the problem data.
      const double tj = dp.mesh.t[k];
      band = std::max((q.a[k] - p.moving.a_at(tj)).cwiseAbs().maxCoeff(), (q.b[k] - p.moving.b_at(tj)).cwiseAbs().maxCoeff());
    }
    r.band.push_back(track(std::max(0.0, band)));
    if (j == nu) break;
    r.inclusion.push_back(track(inclusion_residual(q, p.g, j)));
    const double atol = scaled_tolerance(q.x[k], q.b[k]);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      sup = std::max(sup, -q.eta[k](i));
      if (s(i) < -atol) sup = std::max(sup, q.eta[k](i) * std::min(1.0, -s(i)));
    }
    r.support.push_back(track(sup));
    r.control.push_back(track(dp.control_set(j).violation(q.u[k])));
  }
  r.endpoint = r.state.back();
  r.ini_x = track((q.x.front() - p.x0).norm());
  r.ini_a = track((q.a.front() - p.moving.a_at(0.0)).norm());
  r.ini_b = track((q.b.front() - p.moving.b_at(0.0)).norm());
  if (const auto pin = dp.pinned_u0()) r.ini_u = track((q.u.front() - *pin).norm());
  if (dp.reference) {
    const Reference& ref = *dp.reference;
    for (int j = 0; j < nu; ++j) {
      const auto k = static_cast<std::size_t>(j);
      const Vec xd = q.velocity(j), ad = q.adot(j), bd = q.bdot(j);
      ref.for_each_overlap(dp.mesh.t[k], dp.mesh.t[k + 1], [&](int cell, double len) {
        const auto i = static_cast<std::size_t>(cell);
        r.ic1 += len * ((q.x[k] - ref.x[i]).squaredNorm() + (q.a[k] - ref.a[i]).squaredNorm() +
                        (q.b[k] - ref.b[i]).squaredNorm() + (q.u[k] - ref.u[i]).squaredNorm());
        r.ic2 += len * ((xd - ref.xdot[i]).squaredNorm() + (ad - flatten_rows(ref.adot[i])).squaredNorm() +
                        (bd - ref.bdot[i]).squaredNorm());
      });
    }
  }
  r.ic1_margin = 0.5 * dp.epsilon - r.ic1;
  r.ic2_margin = 0.5 * dp.epsilon - r.ic2;
  track(std::max(0.0, -r.ic1_margin));
  track(std::max(0.0, -r.ic2_margin));
  r.max_violation = worst;
  return r;
}

ThetaTerms theta_terms(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  check_shape(dp, q);
  ThetaTerms th;
  const int nu = dp.nu();
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec xd = q.velocity(j), ad = q.adot(j), bd = q.bdot(j);
    Vec tu = Vec::Zero(q.u[k].size()), tx = Vec::Zero(xd.size()), ta = Vec::Zero(ad.size()), tb = Vec::Zero(bd.size());
    if (dp.reference) {
      const Reference& r = *dp.reference;
      r.for_each_overlap(dp.mesh.t[k], dp.mesh.t[k + 1], [&](int cell, double len) {
        const auto i = static_cast<std::size_t>(cell);
        tu += len * (q.u[k] - r.u[i]);
        tx += len * (xd - r.xdot[i]);
        ta += len * (ad - flatten_rows(r.adot[i]));
        tb += len * (bd - r.bdot[i]);
      });
    }
    th.u.push_back(tu);
    th.x.push_back(tx);
    th.a.push_back(ta);
    th.b.push_back(tb);
  }
  return th;
}

}  // namespace polysweep
