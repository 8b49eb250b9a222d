#include "polysweep/sweeping.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polysweep/errors.hpp"
#include "polysweep/nnls.hpp"

namespace polysweep {

Mesh Mesh::uniform(double horizon, int nu) {
  if (nu < 1 || !(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "uniform mesh needs nu >= 1 and T > 0");
  Mesh mesh;
  mesh.t.resize(static_cast<std::size_t>(nu) + 1);
  for (int j = 0; j <= nu; ++j) mesh.t[static_cast<std::size_t>(j)] = horizon * j / nu;
  mesh.t.back() = horizon;
  return mesh;
}

double Mesh::max_step() const {
  double h = 0.0;
  for (int j = 0; j < nu(); ++j) h = std::max(h, this->h(j));
  return h;
}

void Mesh::validate() const {
  if (t.size() < 2) throw Error(ErrorKind::InvalidArgument, "mesh needs at least two nodes");
  if (t.front() != 0.0) throw Error(ErrorKind::InvalidArgument, "mesh must start at t = 0");
  for (std::size_t k = 1; k < t.size(); ++k)
    if (!(t[k] > t[k - 1])) throw Error(ErrorKind::InvalidArgument, "mesh times must be strictly increasing");
}

Vec DiscreteQuadruple::velocity(int j) const {
  const auto k = static_cast<std::size_t>(j);
  return (x[k + 1] - x[k]) / mesh.h(j);
}

Vec DiscreteQuadruple::adot(int j) const {
  const auto k = static_cast<std::size_t>(j);
  return flatten_rows((a[k + 1] - a[k]) / mesh.h(j));
}

Vec DiscreteQuadruple::bdot(int j) const {
  const auto k = static_cast<std::size_t>(j);
  return (b[k + 1] - b[k]) / mesh.h(j);
}

double inclusion_residual(const DiscreteQuadruple& q, const Perturbation& g, int j) {
  const auto k = static_cast<std::size_t>(j);
  return (q.velocity(j) - g.eval(q.x[k], q.u[k]) + q.a[k].transpose() * q.eta[k]).norm();
}

double max_inclusion_residual(const DiscreteQuadruple& q, const Perturbation& g) {
  double r = 0.0;
  for (int j = 0; j < q.nu(); ++j) r = std::max(r, inclusion_residual(q, g, j));
  return r;
}

const char* to_string(StepMode mode) { return mode == StepMode::Explicit ? "explicit" : "projective"; }

namespace {

std::vector<int> lenient_active(const Polyhedron& p, const Vec& x, double tol) {
  std::vector<int> out;
  const Vec s = p.slack(x);
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) >= -tol) out.push_back(static_cast<int>(i));
  return out;
}

StepResult step_impl(const Polyhedron& current, const Polyhedron& next, const Vec& x, const Vec& u, double h,
                     const Perturbation& g, StepMode mode, double tol, bool lenient) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step size must be positive");
  if (x.size() != current.n() || u.size() != g.d()) throw Error(ErrorKind::DimensionMismatch, "step arguments have wrong size");
  const double t = resolve_tolerance(current, x, tol);
  const Vec gv = g.eval(x, u);
  StepResult out;
  if (mode == StepMode::Projective) {
    const Projection pr = project(next, x + h * gv);
    out.x_next = pr.x;
    out.eta = pr.multipliers / h;
    return out;
  }
  std::vector<int> act;
  if (lenient) {
    act = lenient_active(current, x, t);
  } else {
    try {
      act = active_set(current, x, t).indices;
    } catch (const Error& e) {
      throw Error(ErrorKind::StepFailure, std::string("state infeasible before the step: ") + e.what());
    }
  }
  out.eta = Vec::Zero(current.m());
  Vec vel = gv;
  if (!act.empty()) {
    Mat cols(current.n(), static_cast<Eigen::Index>(act.size()));
    for (std::size_t k = 0; k < act.size(); ++k) cols.col(static_cast<Eigen::Index>(k)) = current.rows().row(act[k]).transpose();
    const NnlsResult fit = nnls_min_norm(cols, gv);
    if (!fit.converged && !lenient) throw Error(ErrorKind::StepFailure, "multiplier fit did not converge");
    for (std::size_t k = 0; k < act.size(); ++k) out.eta(act[k]) = fit.x(static_cast<Eigen::Index>(k));
    vel = gv - current.rows().transpose() * out.eta;
  }
  out.x_next = x + h * vel;
  const Vec s = next.slack(out.x_next);
  const double tn = resolve_tolerance(next, out.x_next, tol);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > tn) {
      if (!lenient)
        throw Error(ErrorKind::StepFailure,
                    "constraint " + std::to_string(i) + " violated by " + std::to_string(s(i)) + " after the step");
      out.violation = std::max(out.violation, s(i));
    }
  }
  return out;
}

}  // namespace

StepResult catching_up_step(const Polyhedron& current, const Polyhedron& next, const Vec& x, const Vec& u, double h,
                            const Perturbation& g, StepMode mode, double tol) {
  return step_impl(current, next, x, u, h, g, mode, tol, false);
}

Simulation simulate(const SweepingProblem& prob, const ControlSequence& controls, const Mesh& mesh,
                    const SimulateOptions& options) {
  mesh.validate();
  const int nu = mesh.nu();
  if (static_cast<int>(controls.u.size()) != nu)
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(nu) + " controls");
  const bool decision = prob.moving.kind == MovingSet::Kind::Decision;
  if (decision && (static_cast<int>(controls.a.size()) != nu + 1 || static_cast<int>(controls.b.size()) != nu + 1))
    throw Error(ErrorKind::DimensionMismatch, "decision moving set needs nu + 1 row sets and offsets");

  Simulation sim;
  DiscreteQuadruple& q = sim.q;
  q.mesh = mesh;
  for (int j = 0; j <= nu; ++j) {
    const double tj = mesh.t[static_cast<std::size_t>(j)];
    q.a.push_back(decision ? controls.a[static_cast<std::size_t>(j)] : prob.moving.a_at(tj));
    q.b.push_back(decision ? controls.b[static_cast<std::size_t>(j)] : prob.moving.b_at(tj));
    if (q.a.back().rows() != prob.m || q.a.back().cols() != prob.n || q.b.back().size() != prob.m)
      throw Error(ErrorKind::DimensionMismatch, "row set at node " + std::to_string(j) + " has wrong shape");
  }
  for (const Vec& u : controls.u)
    if (u.size() != prob.d) throw Error(ErrorKind::DimensionMismatch, "control has wrong length");
  q.u = controls.u;
  q.x.push_back(prob.x0);

  auto node_check = [&](int j) {
    const Polyhedron pj = q.set(j);
    const Vec& xj = q.x[static_cast<std::size_t>(j)];
    const double t = resolve_tolerance(pj, xj, options.tol);
    const Vec s = pj.slack(xj);
    sim.violation += std::max(0.0, s.maxCoeff());
    if (!q.hit_step && s.maxCoeff() >= -t) q.hit_step = j;
    if (!options.lenient && s.maxCoeff() > t)
      throw Error(ErrorKind::StepFailure, "node " + std::to_string(j) + " is infeasible (slack " + std::to_string(s.maxCoeff()) + ")");
  };

  node_check(0);
  for (int j = 0; j < nu; ++j) {
    if (options.control_map) {
      const auto k = static_cast<std::size_t>(j);
      q.u[k] = options.control_map(j, q.x[k], q.set(j), q.u[k]);
      if (q.u[k].size() != prob.d) throw Error(ErrorKind::DimensionMismatch, "mapped control has wrong length");
    }
    StepResult r;
    try {
      r = step_impl(q.set(j), q.set(j + 1), q.x[static_cast<std::size_t>(j)], q.u[static_cast<std::size_t>(j)], mesh.h(j),
                    prob.g, options.mode, options.tol, options.lenient);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::StepFailure || e.kind() == ErrorKind::EmptyPolyhedron)
        throw Error(ErrorKind::StepFailure, "step " + std::to_string(j) + ": " + e.what());
      throw;
    }
    q.x.push_back(r.x_next);
    q.eta.push_back(r.eta);
    node_check(j + 1);
  }
  return sim;
}

int Reference::cell(double s) const {
  if (t.size() < 2) return 0;
  if (s <= t.front()) return 0;
  if (s >= t.back()) return static_cast<int>(t.size()) - 2;
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  return static_cast<int>(it - t.begin()) - 1;
}

namespace {

template <class T>
T interpolate(const std::vector<double>& t, const std::vector<T>& v, int k, double s) {
  if (t.size() < 2) return v.front();
  const auto i = static_cast<std::size_t>(k);
  const double w = std::clamp((s - t[i]) / (t[i + 1] - t[i]), 0.0, 1.0);
  return (1.0 - w) * v[i] + w * v[i + 1];
}

}  // namespace

Vec Reference::x_at(double s) const { return interpolate(t, x, cell(s), s); }
Mat Reference::a_at(double s) const { return interpolate(t, a, cell(s), s); }
Vec Reference::b_at(double s) const { return interpolate(t, b, cell(s), s); }

void Reference::for_each_overlap(double s0, double s1, const std::function<void(int, double)>& f) const {
  if (t.size() < 2 || !(s1 > s0)) return;
  for (int k = cell(s0); k + 1 < size(); ++k) {
    const double lo = std::max(t[static_cast<std::size_t>(k)], s0);
    const double hi = std::min(t[static_cast<std::size_t>(k) + 1], s1);
    if (t[static_cast<std::size_t>(k)] >= s1) break;
    if (hi > lo) f(k, hi - lo);
  }
}

Reference Reference::from_quadruple(const DiscreteQuadruple& q) {
  Reference r;
  const int nu = q.nu();
  r.t = q.mesh.t;
  r.x = q.x;
  r.a = q.a;
  r.b = q.b;
  for (int k = 0; k <= nu; ++k) {
    const int j = std::min(k, nu - 1);
    r.xdot.push_back(q.velocity(j));
    r.adot.push_back((q.a[static_cast<std::size_t>(j) + 1] - q.a[static_cast<std::size_t>(j)]) / q.mesh.h(j));
    r.bdot.push_back(q.bdot(j));
    r.u.push_back(q.u[static_cast<std::size_t>(j)]);
  }
  return r;
}

Reference Reference::sample(const std::vector<double>& grid, const Functions& f) {
  Reference r;
  r.t = grid;
  for (double s : grid) {
    r.x.push_back(f.x(s));
    r.xdot.push_back(f.xdot(s));
    r.a.push_back(f.a(s));
    r.adot.push_back(f.adot(s));
    r.b.push_back(f.b(s));
    r.bdot.push_back(f.bdot(s));
    r.u.push_back(f.u(s));
  }
  r.validate();
  return r;
}

void Reference::validate() const {
  const std::size_t n = t.size();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "reference needs at least two samples");
  if (x.size() != n || xdot.size() != n || a.size() != n || adot.size() != n || b.size() != n || bdot.size() != n ||
      u.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "reference sample arrays differ in length");
  for (std::size_t k = 1; k < n; ++k)
    if (!(t[k] > t[k - 1])) throw Error(ErrorKind::InvalidArgument, "reference times must increase");
}

W12Gap w12_distance(const Reference& r1, const Reference& r2, bool resample) {
  r1.validate();
  r2.validate();
  if (std::abs(r1.t.back() - r2.t.back()) > 1e-12 * (1.0 + r1.t.back()) || r1.t.front() != r2.t.front())
    throw Error(ErrorKind::MeshMismatch, "references cover different intervals");
  std::vector<double> grid;
  if (!resample) {
    if (r1.t != r2.t) throw Error(ErrorKind::MeshMismatch, "grids differ and resampling is disabled");
    grid = r1.t;
  } else {
    grid = r1.t;
    grid.insert(grid.end(), r2.t.begin(), r2.t.end());
    std::sort(grid.begin(), grid.end());
    std::vector<double> merged;
    for (double s : grid)
      if (merged.empty() || s - merged.back() > 1e-13 * (1.0 + std::abs(s))) merged.push_back(s);
    merged.back() = r1.t.back();
    grid = merged;
  }
  double sx = 0.0, sab = 0.0, su = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double len = grid[k + 1] - grid[k];
    const double mid = 0.5 * (grid[k] + grid[k + 1]);
    const int c1 = r1.cell(mid), c2 = r2.cell(mid);
    const auto i1 = static_cast<std::size_t>(c1), i2 = static_cast<std::size_t>(c2);
    sx += len * (r1.xdot[i1] - r2.xdot[i2]).squaredNorm();
    sab += len * ((r1.adot[i1] - r2.adot[i2]).squaredNorm() + (r1.bdot[i1] - r2.bdot[i2]).squaredNorm());
    su += len * (r1.u[i1] - r2.u[i2]).squaredNorm();
  }
  W12Gap gap;
  gap.state = (r1.x.front() - r2.x.front()).norm() + std::sqrt(sx);
  gap.ab = std::sqrt((r1.a.front() - r2.a.front()).squaredNorm() + (r1.b.front() - r2.b.front()).squaredNorm()) + std::sqrt(sab);
  gap.u = std::sqrt(su);
  return gap;
}

namespace {

double variation(const std::vector<Vec>& v) {
  double s = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k) s += (v[k] - v[k - 1]).norm();
  return s;
}

}  // namespace

Discretization discretize_feasible(const SweepingProblem& prob, const Reference& ref, const Mesh& mesh,
                                   const DiscretizeOptions& options) {
  mesh.validate();
  ref.validate();
  const int nu = mesh.nu();
  const double horizon = mesh.t.back();
  if (std::abs(ref.t.back() - horizon) > 1e-12 * (1.0 + horizon))
    throw Error(ErrorKind::MeshMismatch, "reference and mesh end at different times");

  Discretization out;
  DiscreteQuadruple& q = out.q;
  DiscretizeDiagnostics& dg = out.diag;
  q.mesh = mesh;

  // Step 1: interval averages of u and of adot.
  std::vector<Vec> uk(static_cast<std::size_t>(nu));
  std::vector<Mat> alpha(static_cast<std::size_t>(nu));
  double int_u = 0.0, int_a = 0.0;
  for (int j = 0; j < nu; ++j) {
    const double t0 = mesh.t[static_cast<std::size_t>(j)], t1 = mesh.t[static_cast<std::size_t>(j) + 1];
    Vec su = Vec::Zero(prob.d);
    Mat sa = Mat::Zero(prob.m, prob.n);
    ref.for_each_overlap(t0, t1, [&](int k, double len) {
      su += len * ref.u[static_cast<std::size_t>(k)];
      sa += len * ref.adot[static_cast<std::size_t>(k)];
    });
    uk[static_cast<std::size_t>(j)] = su / (t1 - t0);
    alpha[static_cast<std::size_t>(j)] = sa / (t1 - t0);
    ref.for_each_overlap(t0, t1, [&](int k, double len) {
      int_u += len * (uk[static_cast<std::size_t>(j)] - ref.u[static_cast<std::size_t>(k)]).squaredNorm();
      int_a += len * (alpha[static_cast<std::size_t>(j)] - ref.adot[static_cast<std::size_t>(k)]).squaredNorm();
    });
  }
  dg.mu_k = std::max(int_u, int_a);
  dg.delta_k = std::sqrt(prob.n * dg.mu_k * horizon);

  // Step 2: a^k by integration, b^k matching the reference slacks, x^k by Euler.
  q.a.push_back(ref.a_at(0.0));
  for (int j = 0; j < nu; ++j)
    q.a.push_back(q.a.back() + mesh.h(j) * alpha[static_cast<std::size_t>(j)]);
  q.x.push_back(prob.x0);
  q.u = uk;
  dg.lipschitz = prob.g.lipschitz();
  dg.growth = options.growth >= 0.0
                  ? options.growth
                  : std::max(Eigen::JacobiSVD<Mat>(prob.g.gx()).singularValues()(0),
                             Eigen::JacobiSVD<Mat>(prob.g.gu()).singularValues()(0) * prob.controls.max_norm() +
                                 prob.g.c().norm());
  dg.gamma = 1.0;
  double max_ratio = 0.0;
  for (int j = 0; j <= nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double tj = mesh.t[k];
    const Vec xbar = ref.x_at(tj);
    const Polyhedron pbar(ref.a_at(tj), ref.b_at(tj));
    const Vec sbar = pbar.slack(xbar);
    const double act_tol = options.tol >= 0.0 ? options.tol : 1e-8 * (1.0 + xbar.norm() + pbar.offsets().norm());
    if (sbar.maxCoeff() > act_tol)
      throw Error(ErrorKind::InfeasibleInput, "reference state leaves the set at t = " + std::to_string(tj));
    q.b.push_back(q.a[k] * q.x[k] - sbar);
    ActiveSet abar;
    for (Eigen::Index i = 0; i < sbar.size(); ++i)
      if (std::abs(sbar(i)) <= act_tol) abar.indices.push_back(static_cast<int>(i));
    abar.tolerance = act_tol;
    ActiveSet ak;
    const Vec sk = q.a[k] * q.x[k] - q.b[k];
    for (Eigen::Index i = 0; i < sk.size(); ++i)
      if (std::abs(sk(i)) <= act_tol) ak.indices.push_back(static_cast<int>(i));
    if (ak.indices != abar.indices) dg.active_sets_match = false;
    if (!q.hit_step && !ak.indices.empty()) q.hit_step = j;
    dg.max_node_error = std::max(dg.max_node_error, (q.x[k] - xbar).norm());
    if (!abar.indices.empty()) dg.gamma = std::max(dg.gamma, inverse_triangle_constant(pbar, abar.indices));
    if (j == nu) break;

    const Vec ubar = ref.u_at(tj);
    const Vec xdot = ref.xdot_at(tj);
    const Vec normal = -xdot + prob.g.eval(xbar, ubar);
    const PlicqReport plicq = check_plicq(pbar, xbar, act_tol);
    if (!plicq.holds) throw Error(ErrorKind::PLICQViolation, "active rows positively dependent at t = " + std::to_string(tj));
    Vec eta;
    try {
      const double fit_tol = options.tol >= 0.0 ? options.tol : 1e-8 * (1.0 + normal.norm() + xbar.norm());
      eta = Vec::Zero(prob.m);
      if (!abar.indices.empty() || normal.norm() > fit_tol) {
        Mat cols(prob.n, static_cast<Eigen::Index>(abar.indices.size()));
        for (std::size_t c = 0; c < abar.indices.size(); ++c)
          cols.col(static_cast<Eigen::Index>(c)) = pbar.rows().row(abar.indices[c]).transpose();
        const NnlsResult fit = nnls_min_norm(cols, normal);
        if (fit.residual > fit_tol) throw Error(ErrorKind::NotInNormalCone, "residual " + std::to_string(fit.residual));
        for (std::size_t c = 0; c < abar.indices.size(); ++c) eta(abar.indices[c]) = fit.x(static_cast<Eigen::Index>(c));
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::InfeasibleInput, "reference violates the inclusion at t = " + std::to_string(tj) + ": " + e.what());
    }
    const double scale = xdot.norm() + prob.g.eval(xbar, ubar).norm();
    for (int i = 0; i < prob.m; ++i)
      if (eta(i) > 0.0 && scale > 0.0)
        max_ratio = std::max(max_ratio, eta(i) * pbar.rows().row(i).norm() / (dg.gamma * scale));
    q.eta.push_back(eta);
    const Vec v = -q.a[k].transpose() * eta + prob.g.eval(q.x[k], uk[k]);
    q.x.push_back(q.x[k] + mesh.h(j) * v);
  }
  dg.max_eta_ratio = max_ratio;
  dg.max_inclusion_residual = max_inclusion_residual(q, prob.g);
  dg.gap = w12_distance(Reference::from_quadruple(q), ref);

  // A-priori bound of the state error at the nodes.
  const double var_x = variation(ref.xdot);
  const double var_u = variation(ref.u);
  dg.variation = std::max(var_x, var_u);
  double xmax = 0.0;
  for (const Vec& x : ref.x) xmax = std::max(xmax, x.norm());
  dg.mx1 = ref.xdot.front().norm() + var_x;
  dg.mx2 = dg.gamma * dg.mx1 + dg.gamma * dg.growth * (1.0 + xmax);
  const double hk = mesh.max_step();
  const double nutilde = nu * hk;
  const int level = options.level >= 0 ? options.level : static_cast<int>(std::lround(std::log2(static_cast<double>(nu))));
  const double L = dg.lipschitz;
  dg.theta_k = std::exp(L * nutilde) * ((hk * dg.variation + nutilde * std::ldexp(1.0, -level)) * (L + 1.0) +
                                        L * std::sqrt(horizon * dg.mu_k) + dg.mx2 * prob.m * nutilde * dg.delta_k);
  return out;
}

}  // namespace polysweep
