#include "polysweep/solve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "polysweep/errors.hpp"
#include "polysweep/qp.hpp"

namespace polysweep {

const char* to_string(EtaBranch branch) {
  switch (branch) {
    case EtaBranch::Any: return "any";
    case EtaBranch::Riding: return "riding";
    case EtaBranch::Resting: return "resting";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool lex_less(const Vec& a, const Vec& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

void require_family(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::FamilyMismatch, what);
}

}  // namespace

ReducedSolution solve_reduced_halfspace(const DiscreteProblem& dp, EtaBranch branch) {
  const SweepingProblem& p = dp.base;
  require_family(p.n == 2 && p.m == 1 && p.d == 2, "reduction needs n = 2, m = 1, d = 2");
  require_family(p.moving.kind == MovingSet::Kind::Fixed, "reduction needs a fixed row");
  require_family(p.g.is_identity(), "reduction needs g(x, u) = u");
  require_family(p.controls.kind() == ControlSet::Kind::Box, "reduction needs a box control set");
  require_family(p.phi.q.size() == 0 || p.phi.q.norm() == 0.0, "reduction needs a linear terminal cost");
  require_family(dp.nu() == 2, "reduction needs nu = 2");
  require_family(!dp.reference, "reduction does not model the proximity term");
  for (int b = 0; b < RunningCost::Count; ++b)
    require_family(b == RunningCost::U || !p.ell.uses(b), "reduction needs a control-only running cost");
  const Vec& w = p.ell.blocks[RunningCost::U].weight;
  require_family(w.size() == 2 && w.minCoeff() > 0.0, "reduction needs a positive diagonal control weight");
  const std::optional<Vec> pin = dp.pinned_u0();
  require_family(pin.has_value(), "reduction needs a pinned first control");
  for (const ControlWindow& win : dp.windows)
    if (win.t0 <= dp.mesh.t[1] && dp.mesh.t[1] < win.t1) require_family(false, "reduction needs U on the second step");

  const double h0 = dp.mesh.h(0), h1 = dp.mesh.h(1);
  const Vec a = p.moving.a0.row(0).transpose();
  const double bb = p.moving.b0(0);
  const Vec x1 = p.x0 + h0 * *pin;
  require_family(std::abs(a.dot(x1) - bb) <= 1e-9 * (1.0 + x1.norm() + std::abs(bb)),
                 "the pinned first control does not reach the boundary");
  const Mat proj = Mat::Identity(2, 2) - a * a.transpose() / a.squaredNorm();
  const Vec lin = p.ell.blocks[RunningCost::U].linear.size() ? p.ell.blocks[RunningCost::U].linear : Vec::Zero(2);
  const Vec phi_c = p.phi.c;
  // J(u) = phi(x1 + h1 P u) + h0 l(u0) + h1 l(u): Hessian h1 W, gradient at 0 h1 (P phi_c + lin).
  const Mat hess = h1 * Mat(w.asDiagonal());
  const Vec grad0 = h1 * (proj * phi_c + lin);
  auto cost = [&](const Vec& u) {
    return p.phi.eval(x1 + h1 * proj * u) + h0 * p.ell.eval_block(RunningCost::U, *pin) +
           h1 * p.ell.eval_block(RunningCost::U, u);
  };
  auto eta_row = [&](const Vec& u) { return a.dot(u) / a.squaredNorm(); };
  int lead = 0;
  while (lead < 1 && a(lead) == 0.0) ++lead;
  const double lead_scale = std::abs(a(lead));

  // Constraints c_k^T u <= r_k.
  struct Con {
    std::string label;
    Vec row;
    double rhs;
  };
  const Vec lo = p.controls.lower(), hi = p.controls.upper();
  std::vector<Con> cons;
  for (int i = 0; i < 2; ++i) {
    cons.push_back({"u" + std::to_string(i + 1) + "=lower", -Vec::Unit(2, i), -lo(i)});
    cons.push_back({"u" + std::to_string(i + 1) + "=upper", Vec::Unit(2, i), hi(i)});
  }
  cons.push_back({"eta=0", -a, 0.0});
  const int nc = static_cast<int>(cons.size());

  ReducedSolution out;
  out.u_first = *pin;
  auto consider = [&](const std::vector<int>& act) {
    const int k = static_cast<int>(act.size());
    Mat kkt = Mat::Zero(2 + k, 2 + k);
    Vec rhs(2 + k);
    kkt.topLeftCorner(2, 2) = hess;
    rhs.head(2) = -grad0;
    std::string label;
    for (int r = 0; r < k; ++r) {
      const Con& c = cons[static_cast<std::size_t>(act[static_cast<std::size_t>(r)])];
      kkt.block(0, 2 + r, 2, 1) = c.row;
      kkt.block(2 + r, 0, 1, 2) = c.row.transpose();
      rhs(2 + r) = c.rhs;
      label += (label.empty() ? "" : ",") + c.label;
    }
    Eigen::FullPivLU<Mat> lu(kkt);
    if (!lu.isInvertible()) return;
    const Vec sol = lu.solve(rhs);
    ReducedCandidate cand;
    cand.label = label.empty() ? "stationary" : label;
    cand.u = sol.head(2);
    cand.eta_row = eta_row(cand.u);
    cand.eta_leading = cand.eta_row * lead_scale;
    cand.cost = cost(cand.u);
    cand.feasible = true;
    for (const Con& c : cons) cand.feasible = cand.feasible && c.row.dot(cand.u) <= c.rhs + 1e-12;
    out.candidates.push_back(cand);
  };
  consider({});
  for (int i = 0; i < nc; ++i) consider({i});
  for (int i = 0; i < nc; ++i)
    for (int j = i + 1; j < nc; ++j) consider({i, j});

  const ReducedCandidate* best = nullptr;
  for (const ReducedCandidate& c : out.candidates) {
    if (!c.feasible) continue;
    const bool resting = c.label.find("eta=0") != std::string::npos;
    if (branch == EtaBranch::Resting && !resting) continue;
    if (branch == EtaBranch::Riding && (resting || c.eta_row <= 0.0)) continue;
    if (!best || c.cost < best->cost || (c.cost == best->cost && lex_less(c.u, best->u))) best = &c;
  }
  if (!best) throw Error(ErrorKind::NoFeasibleStart, std::string("no feasible candidate on the ") + to_string(branch) + " branch");
  out.u = best->u;
  out.cost = best->cost;
  out.eta_row = best->eta_row;
  out.eta_leading = best->eta_leading;
  out.label = best->label;
  ControlSequence cs;
  cs.u = {*pin, out.u};
  out.q = simulate(p, cs, dp.mesh).q;
  return out;
}

namespace {

// One block of decision variables.
struct Block {
  enum Kind { Control, Rows, Offsets } kind;
  int node;    // step j for controls, node j for rows/offsets
  int offset;  // into the variable vector
  int size;
};

class Shooting {
 public:
  Shooting(const DiscreteProblem& dp, const SolveOptions& opt) : dp_(dp), opt_(opt) {
    const SweepingProblem& p = dp.base;
    const int nu = dp.nu();
    pin_ = dp.pinned_u0();
    decision_ = p.moving.kind == MovingSet::Kind::Decision;
    for (int j = 0; j < nu; ++j) {
      const ControlSet& u = dp.control_set(j);
      const bool fixed = (j == 0 && pin_) || (u.kind() == ControlSet::Kind::Finite && u.points().size() == 1);
      if (!fixed) add_block(Block::Control, j, p.d);
    }
    control_vars_ = total_;
    if (decision_) {
      for (int j = 1; j <= nu; ++j) {
        add_block(Block::Rows, j, p.m * p.n);
        add_block(Block::Offsets, j, p.m);
      }
    }
    range_ = Vec::Ones(total_);
    for (const Block& b : blocks_) {
      if (b.kind != Block::Control) continue;
      const ControlSet& u = dp.control_set(b.node);
      for (int i = 0; i < b.size; ++i) {
        double r = 1.0;
        if (u.kind() == ControlSet::Kind::Box) r = u.upper()(i) - u.lower()(i);
        if (u.kind() == ControlSet::Kind::Ball) r = 2.0 * u.radius();
        range_(b.offset + i) = r > 0.0 ? r : 1.0;
      }
    }
  }

  int size() const { return total_; }
  int control_vars() const { return control_vars_; }
  const Vec& range() const { return range_; }

  Vec pack(const DiscreteQuadruple& q) const {
    Vec z(total_);
    for (const Block& b : blocks_) {
      const auto k = static_cast<std::size_t>(b.node);
      if (b.kind == Block::Control) z.segment(b.offset, b.size) = q.u[k];
      if (b.kind == Block::Rows) z.segment(b.offset, b.size) = flatten_rows(q.a[k]);
      if (b.kind == Block::Offsets) z.segment(b.offset, b.size) = q.b[k];
    }
    return z;
  }

  // Halton start mapped into the control sets; decision rows are kept from init.
  Vec start_point(const Vec& cube, const Vec& init) const {
    Vec z = init;
    for (const Block& b : blocks_) {
      if (b.kind != Block::Control) continue;
      const ControlSet& u = dp_.control_set(b.node);
      const Vec c = cube.segment(b.offset, b.size);
      Vec v(b.size);
      switch (u.kind()) {
        case ControlSet::Kind::Box: v = u.lower() + c.cwiseProduct(u.upper() - u.lower()); break;
        case ControlSet::Kind::Ball: v = u.center() + u.radius() * (2.0 * c.array() - 1.0).matrix(); break;
        case ControlSet::Kind::Finite: {
          const auto n = u.points().size();
          v = u.points()[std::min(n - 1, static_cast<std::size_t>(c(0) * static_cast<double>(n)))];
          break;
        }
      }
      z.segment(b.offset, b.size) = v;
    }
    return z;
  }

  struct Point {
    Vec z;
    double merit = kInf;
    double cost = kInf;
    double violation = kInf;
    DiscreteQuadruple q;
    CostBreakdown breakdown;
    ResidualReport residuals;
  };

  // Penalty: J + rho P.  Restore: P alone.  Barrier: J on the feasible set, inf outside.
  enum class Merit { Penalty, Restore, Barrier };

  Point evaluate(const Vec& raw, double rho, Merit mode = Merit::Penalty) {
    ++evaluations_;
    Point pt;
    const SweepingProblem& p = dp_.base;
    const int nu = dp_.nu();
    ControlSequence cs;
    std::vector<bool> have(static_cast<std::size_t>(nu), false);
    cs.u.assign(static_cast<std::size_t>(nu), Vec());
    if (decision_) {
      cs.a.assign(static_cast<std::size_t>(nu + 1), p.moving.a0);
      cs.b.assign(static_cast<std::size_t>(nu + 1), p.moving.b0);
    }
    for (const Block& b : blocks_) {
      const auto k = static_cast<std::size_t>(b.node);
      const Vec seg = raw.segment(b.offset, b.size);
      if (b.kind == Block::Control) {
        cs.u[k] = dp_.control_set(b.node).project(seg);
        have[k] = true;
      } else if (b.kind == Block::Rows) {
        Mat a = unflatten_rows(seg, p.m, p.n);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
          const double nr = a.row(i).norm();
          const double lo = 1.0 - dp_.delta_k, hi = 1.0 + dp_.delta_k;
          if (nr == 0.0) a.row(i) = Vec::Unit(p.n, 0).transpose() * lo;
          else if (nr < lo || nr > hi) a.row(i) *= std::clamp(nr, lo, hi) / nr;
        }
        cs.a[k] = a;
      } else {
        cs.b[k] = seg;
      }
    }
    for (int j = 0; j < nu; ++j) {
      const auto k = static_cast<std::size_t>(j);
      if (have[k]) continue;
      const ControlSet& u = dp_.control_set(j);
      cs.u[k] = (j == 0 && pin_) ? *pin_ : u.points().front();
    }
    SimulateOptions so;
    so.mode = dp_.mode;
    so.lenient = true;
    so.tol = dp_.tol;
    if (opt_.branch == EtaBranch::Resting) so.control_map = [this](int j, const Vec& x, const Polyhedron& c, const Vec& u) {
      return rest_map(j, x, c, u);
    };
    Simulation sim;
    try {
      sim = simulate(p, cs, dp_.mesh, so);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::StepFailure || e.kind() == ErrorKind::EmptyPolyhedron) {
        pt.z = raw;
        return pt;
      }
      throw;
    }
    pt.q = std::move(sim.q);
    pt.z = pack(pt.q);
    pt.breakdown = cost_Jk(dp_, pt.q);
    pt.residuals = feasibility_residuals(dp_, pt.q);
    const ResidualReport& r = pt.residuals;
    double pen = 0.0;
    for (double s : r.state) pen += s * s;
    for (double s : r.band) pen += s * s;
    pen += std::pow(std::max(0.0, -r.ic1_margin), 2) + std::pow(std::max(0.0, -r.ic2_margin), 2);
    pt.violation = r.max_violation;
    if (opt_.branch == EtaBranch::Resting) {
      for (const Vec& e : pt.q.eta) {
        pen += e.squaredNorm();
        pt.violation = std::max(pt.violation, e.cwiseAbs().maxCoeff());
      }
    }
    pt.cost = pt.breakdown.total;
    switch (mode) {
      case Merit::Penalty: pt.merit = pt.cost + rho * pen; break;
      case Merit::Restore: pt.merit = pen; break;
      case Merit::Barrier: pt.merit = pt.violation <= opt_.feas_tol ? pt.cost : kInf; break;
    }
    if (!std::isfinite(pt.merit)) pt.merit = kInf;
    offer(pt);
    return pt;
  }

  void offer(const Point& pt) {
    if (!(pt.violation <= opt_.feas_tol)) return;
    if (!best_ || pt.cost < best_->cost || (pt.cost == best_->cost && lex_less(pt.z, best_->z))) {
      best_ = pt;
      best_start_ = current_start_;
    }
  }

  // Pattern search from z at penalty rho; returns the final point.
  Point search(const Vec& z0, double rho, int start, int round, std::vector<HistoryEntry>& history, bool& budget_hit,
               Merit mode = Merit::Penalty) {
    current_start_ = start;
    Point cur = evaluate(z0, rho, mode);
    // Restoration and polishing stay local to the penalty iterate.
    Vec step = (mode == Merit::Penalty ? opt_.step0 : 1e-3 * opt_.step0) * range_;
    const long budget = evaluations_ + opt_.max_evaluations;
    auto record = [&](const Point& pt) {
      history.push_back({start, round, evaluations_, pt.merit, pt.cost, pt.violation, best_ ? best_->cost : kInf});
    };
    record(cur);
    for (;;) {
      bool active = false;
      const Point sweep_start = cur;
      for (int i = 0; i < total_; ++i) {
        if (step(i) < opt_.min_step * range_(i)) continue;
        active = true;
        if (evaluations_ >= budget) {
          budget_hit = true;
          return cur;
        }
        Vec zp = cur.z, zm = cur.z;
        zp(i) += step(i);
        zm(i) -= step(i);
        const Point pp = evaluate(zp, rho, mode);
        const Point pm = evaluate(zm, rho, mode);
        const Point* pick = &cur;
        if (pp.merit < pick->merit) pick = &pp;
        if (pm.merit < pick->merit) pick = &pm;
        Point para;
        const double curv = pp.merit + pm.merit - 2.0 * cur.merit;
        if (std::isfinite(curv) && curv > 0.0) {
          const double t = std::clamp(step(i) * (pm.merit - pp.merit) / (2.0 * curv), -4.0 * step(i), 4.0 * step(i));
          Vec zt = cur.z;
          zt(i) += t;
          para = evaluate(zt, rho, mode);
          if (para.merit < pick->merit) pick = &para;
        }
        if (pick != &cur) {
          cur = *pick;
          record(cur);
          if (mode == Merit::Restore && cur.violation <= opt_.feas_tol) return cur;
          step(i) = std::min(2.0 * step(i), opt_.step0 * range_(i));
        } else {
          step(i) *= 0.5;
        }
      }
      if (!active) return cur;
      // Hooke-Jeeves pattern move along the net displacement of the sweep.
      if (cur.merit < sweep_start.merit) {
        Point jump = evaluate(2.0 * cur.z - sweep_start.z, rho, mode);
        if (jump.merit < cur.merit) {
          cur = std::move(jump);
          record(cur);
        }
      }
    }
  }

  // Newton steps on the box-interior controls of the best point, with central
  // difference derivatives of J on the feasible set.  Cost-only search stalls
  // about sqrt(eps) from a smooth minimiser; a step is kept when J does not
  // increase beyond rounding and the gradient shrinks.
  void polish(int rounds, int max_free) {
    if (!best_) return;
    std::vector<int> free;
    Vec h(total_);
    for (const Block& b : blocks_) {
      if (b.kind != Block::Control) continue;
      const ControlSet& u = dp_.control_set(b.node);
      if (u.kind() != ControlSet::Kind::Box) continue;
      for (int i = 0; i < b.size; ++i) {
        const int k = b.offset + i;
        h(k) = 1e-4 * range_(k);
        const double z = best_->z(k);
        if (z - u.lower()(i) > 4.0 * h(k) && u.upper()(i) - z > 4.0 * h(k)) free.push_back(k);
      }
    }
    const int n = static_cast<int>(free.size());
    if (n == 0 || n > max_free) return;
    auto f = [&](const Vec& z) { return evaluate(z, 0.0, Merit::Barrier).merit; };
    auto shifted = [&](const Vec& z, int a, double sa, int b = -1, double sb = 0.0) {
      Vec y = z;
      y(free[static_cast<std::size_t>(a)]) += sa * h(free[static_cast<std::size_t>(a)]);
      if (b >= 0) y(free[static_cast<std::size_t>(b)]) += sb * h(free[static_cast<std::size_t>(b)]);
      return y;
    };
    auto gradient = [&](const Vec& z, Vec& g) {
      g.resize(n);
      for (int a = 0; a < n; ++a) {
        g(a) = (f(shifted(z, a, 1.0)) - f(shifted(z, a, -1.0))) / (2.0 * h(free[static_cast<std::size_t>(a)]));
        if (!std::isfinite(g(a))) return false;
      }
      return true;
    };
    Point cur = *best_;
    Vec g;
    if (!gradient(cur.z, g)) return;
    for (int r = 0; r < rounds; ++r) {
      Mat hess(n, n);
      const double f0 = cur.merit;
      for (int a = 0; a < n; ++a) {
        const double ha = h(free[static_cast<std::size_t>(a)]);
        hess(a, a) = (f(shifted(cur.z, a, 1.0)) - 2.0 * f0 + f(shifted(cur.z, a, -1.0))) / (ha * ha);
        for (int b = 0; b < a; ++b) {
          const double hb = h(free[static_cast<std::size_t>(b)]);
          hess(a, b) = hess(b, a) = (f(shifted(cur.z, a, 1.0, b, 1.0)) - f(shifted(cur.z, a, 1.0, b, -1.0)) -
                                     f(shifted(cur.z, a, -1.0, b, 1.0)) + f(shifted(cur.z, a, -1.0, b, -1.0))) /
                                    (4.0 * ha * hb);
        }
      }
      if (!hess.allFinite()) return;
      // Flat directions (a control map that projects them out) are left alone.
      const Eigen::SelfAdjointEigenSolver<Mat> eig(hess);
      if (eig.info() != Eigen::Success) return;
      const Vec& lam = eig.eigenvalues();
      const double top = lam.cwiseAbs().maxCoeff();
      if (!(top > 0.0) || lam.minCoeff() < -1e-6 * top) return;
      Vec coef = eig.eigenvectors().transpose() * (-g);
      for (int a = 0; a < n; ++a) coef(a) = lam(a) > 1e-6 * top ? coef(a) / lam(a) : 0.0;
      const Vec d = eig.eigenvectors() * coef;
      Vec z = cur.z;
      for (int a = 0; a < n; ++a) z(free[static_cast<std::size_t>(a)]) += d(a);
      Point next = evaluate(z, 0.0, Merit::Barrier);
      Vec gn;
      if (!std::isfinite(next.merit) || next.cost > cur.cost + 1e-13 * (1.0 + std::abs(cur.cost)) || !gradient(next.z, gn) ||
          gn.norm() >= g.norm())
        return;
      cur = std::move(next);
      g = std::move(gn);
      best_ = cur;
    }
  }

  long evaluations() const { return evaluations_; }
  const std::optional<Point>& best() const { return best_; }
  int best_start() const { return best_start_; }

 private:
  void add_block(Block::Kind kind, int node, int size) {
    blocks_.push_back({kind, node, total_, size});
    total_ += size;
  }

  // Projection of u onto U_j intersected with {<a_i, g(x, u)> <= 0 for rows active at x}.
  Vec rest_map(int j, const Vec& x, const Polyhedron& c, const Vec& u) const {
    const ControlSet& set = dp_.control_set(j);
    const Vec s = c.slack(x);
    const double tol = resolve_tolerance(c, x, dp_.tol);
    std::vector<int> act;
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (s(i) >= -tol) act.push_back(static_cast<int>(i));
    if (act.empty() || (j == 0 && pin_) || (set.kind() == ControlSet::Kind::Finite && set.points().size() == 1))
      return u;
    if (set.kind() != ControlSet::Kind::Box)
      throw Error(ErrorKind::InvalidArgument, "the resting branch is implemented for box control sets");
    const Perturbation& g = dp_.base.g;
    const int d = g.d();
    const int k = static_cast<int>(act.size());
    ProjectionQp qp;
    qp.g_mat = Mat::Zero(2 * d + k, d);
    qp.g_rhs = Vec::Zero(2 * d + k);
    qp.g_mat.topRows(d) = Mat::Identity(d, d);
    qp.g_rhs.head(d) = set.upper();
    qp.g_mat.middleRows(d, d) = -Mat::Identity(d, d);
    qp.g_rhs.segment(d, d) = -set.lower();
    const Vec drift = g.gx() * x + g.c();
    for (int r = 0; r < k; ++r) {
      const Vec ai = c.rows().row(act[static_cast<std::size_t>(r)]).transpose();
      qp.g_mat.row(2 * d + r) = (g.gu().transpose() * ai).transpose();
      qp.g_rhs(2 * d + r) = -ai.dot(drift);
    }
    try {
      return project_onto(qp, u).z;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::EmptyPolyhedron) return set.project(u);
      throw;
    }
  }

  const DiscreteProblem& dp_;
  const SolveOptions& opt_;
  std::optional<Vec> pin_;
  bool decision_ = false;
  std::vector<Block> blocks_;
  int total_ = 0;
  int control_vars_ = 0;
  Vec range_;
  long evaluations_ = 0;
  std::optional<Point> best_;
  int best_start_ = -1;
  int current_start_ = -1;
};

// Radical inverse in the given base.
double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
    i /= base;
  }
  return r;
}

std::vector<std::uint64_t> first_primes(int count) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t c = 2; static_cast<int>(out.size()) < count; ++c) {
    bool prime = true;
    for (std::uint64_t p : out) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) out.push_back(c);
  }
  return out;
}

}  // namespace

SolveResult solve_Pk(const DiscreteProblem& dp, const DiscreteQuadruple& init, const SolveOptions& options) {
  dp.validate();
  if (!(init.mesh == dp.mesh)) throw Error(ErrorKind::NoFeasibleStart, "init lives on a different mesh");
  const ResidualReport r0 = feasibility_residuals(dp, init);
  if (!r0.feasible(options.feas_tol))
    throw Error(ErrorKind::NoFeasibleStart, "init violates the constraints by " + std::to_string(r0.max_violation));

  Shooting sh(dp, options);
  SolveResult out;
  const Vec z_init = sh.pack(init);

  std::vector<Vec> starts{z_init};
  const int dim = std::max(1, sh.size());
  const std::vector<std::uint64_t> primes = first_primes(dim);
  std::mt19937_64 rng(options.seed);
  Vec shift(dim);
  for (int i = 0; i < dim; ++i) shift(i) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  for (int s = 1; s <= options.starts; ++s) {
    Vec cube(dim);
    for (int i = 0; i < dim; ++i) cube(i) = std::fmod(radical_inverse(static_cast<std::uint64_t>(s), primes[static_cast<std::size_t>(i)]) + shift(i), 1.0);
    starts.push_back(sh.start_point(cube.head(sh.size()), z_init));
  }

  for (std::size_t s = 0; s < starts.size(); ++s) {
    const int id = static_cast<int>(s) - 1;
    Vec z = starts[s];
    int round = 0;
    bool feasible = false;
    for (double rho = options.penalty0; rho <= options.penalty_max * (1.0 + 1e-12); rho *= 10.0, ++round) {
      const auto pt = sh.search(z, rho, id, round, out.history, out.budget_exceeded);
      z = pt.z;
      feasible = pt.violation <= options.feas_tol;
      if (feasible) break;
    }
    if (!feasible) {
      // A binding state constraint leaves the penalty iterate O(1/rho) outside:
      // restore feasibility nearby, then descend on the feasible set.
      using Merit = Shooting::Merit;
      const auto restored = sh.search(z, 0.0, id, ++round, out.history, out.budget_exceeded, Merit::Restore);
      if (restored.violation <= options.feas_tol)
        sh.search(restored.z, 0.0, id, ++round, out.history, out.budget_exceeded, Merit::Barrier);
    }
    if (sh.size() == 0) break;
  }

  sh.polish(3, 64);
  const auto& best = sh.best();
  if (!best) throw Error(ErrorKind::NoFeasibleStart, "no feasible point was evaluated");
  out.q = best->q;
  out.cost = best->breakdown;
  out.residuals = best->residuals;
  out.evaluations = sh.evaluations();
  out.best_start = sh.best_start();
  return out;
}

std::vector<StudyRow> convergence_study(const std::function<DiscreteProblem(int)>& make_problem,
                                        const std::function<ControlSequence(const DiscreteProblem&)>& init_controls,
                                        const Reference& reference, const std::vector<int>& nu_list,
                                        const SolveOptions& options) {
  std::vector<StudyRow> rows;
  for (int nu : nu_list) {
    StudyRow row;
    row.nu = nu;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const DiscreteProblem dp = make_problem(nu);
      SimulateOptions so;
      so.mode = dp.mode;
      so.tol = dp.tol;
      const DiscreteQuadruple init = simulate(dp.base, init_controls(dp), dp.mesh, so).q;
      const SolveResult res = solve_Pk(dp, init, options);
      row.cost = res.cost.total;
      row.gap = w12_distance(Reference::from_quadruple(res.q), reference, true);
      row.max_violation = res.residuals.max_violation;
      row.evaluations = res.evaluations;
      row.ok = true;
      row.status = res.budget_exceeded ? "ok-budget" : "ok";
    } catch (const Error& e) {
      row.status = to_string(e.kind());
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

std::string study_csv(const std::vector<StudyRow>& rows) {
  std::string out = "nu,status,cost,gap_state,gap_ab,gap_u,max_violation,evaluations,seconds\n";
  char buf[512];
  for (const StudyRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%.6f\n", r.nu, r.status.c_str(), r.cost,
                  r.gap.state, r.gap.ab, r.gap.u, r.max_violation, r.evaluations, r.seconds);
    out += buf;
  }
  return out;
}

}  // namespace polysweep
