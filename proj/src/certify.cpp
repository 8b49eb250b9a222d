#include "polysweep/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "polysweep/errors.hpp"
#include "polysweep/lp.hpp"
#include "polysweep/nnls.hpp"

namespace polysweep {

const char* to_string(CertifyMode mode) {
  switch (mode) {
    case CertifyMode::Th71: return "th71";
    case CertifyMode::Th72: return "th72";
  }
  return "?";
}

const char* to_string(GammaCase c) {
  switch (c) {
    case GammaCase::Inactive: return "inactive";
    case GammaCase::Riding: return "riding";
    case GammaCase::Zero: return "zero";
    case GammaCase::Nonneg: return "nonneg";
    case GammaCase::Free: return "free";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Family names per mode.  The raw system folds the adjoint and local maximum
// principle rows into the graph normal cone inclusion.
std::string fam(CertifyMode mode, const std::string& key) {
  if (mode == CertifyMode::Th72) return key;
  if (key == "adjoint_x" || key == "adjoint_a" || key == "adjoint_b" || key == "max_principle" || key == "gamma_rule")
    return "graph_normal";
  if (key == "gmp" || key == "normal_cone_u") return "psi";
  return key;
}

std::string key72(const std::string& key) {
  if (key == "gamma_rule") return "complementarity";
  if (key == "normal_cone_u") return "max_principle";
  return key;
}

std::string family_of(CertifyMode mode, const std::string& key) {
  return mode == CertifyMode::Th72 ? key72(key) : fam(mode, key);
}

std::string idx(const std::string& base, int j) { return base + "[" + std::to_string(j) + "]"; }
std::string idx(const std::string& base, int j, int k) { return idx(base, j) + "[" + std::to_string(k) + "]"; }

void check_quadruple(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  const SweepingProblem& p = dp.base;
  const int nu = dp.nu();
  if (!(q.mesh == dp.mesh)) throw Error(ErrorKind::MeshMismatch, "quadruple mesh differs from the problem mesh");
  if (static_cast<int>(q.x.size()) != nu + 1 || static_cast<int>(q.a.size()) != nu + 1 ||
      static_cast<int>(q.b.size()) != nu + 1 || static_cast<int>(q.u.size()) != nu)
    throw Error(ErrorKind::DimensionMismatch, "quadruple length does not match the mesh");
  for (int j = 0; j <= nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    if (q.x[k].size() != p.n || q.a[k].rows() != p.m || q.a[k].cols() != p.n || q.b[k].size() != p.m)
      throw Error(ErrorKind::DimensionMismatch, "quadruple node " + std::to_string(j) + " has wrong shape");
    if (j < nu && q.u[k].size() != p.d)
      throw Error(ErrorKind::DimensionMismatch, "control " + std::to_string(j) + " has wrong shape");
  }
}

double activity_tol(const DiscreteQuadruple& q, int j, double tol) {
  const auto k = static_cast<std::size_t>(j);
  return tol * (1.0 + q.x[k].norm() + q.b[k].norm());
}

// Primal eta of every step: the one stored in q when it reproduces the step
// velocity, otherwise the minimum-norm nonnegative fit on the active rows.
std::vector<Vec> primal_eta(const DiscreteProblem& dp, const DiscreteQuadruple& q, double tol, double& residual) {
  const SweepingProblem& p = dp.base;
  std::vector<Vec> eta;
  residual = 0.0;
  for (int j = 0; j < dp.nu(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec target = p.g.eval(q.x[k], q.u[k]) - q.velocity(j);
    const double fit_tol = std::max(tol, 1e-8) * (1.0 + target.norm());
    const Vec slack = q.a[k] * q.x[k] - q.b[k];
    const double atol = activity_tol(q, j, tol);
    auto supported = [&](const Vec& e) {
      if (e.size() != p.m) return false;
      for (int i = 0; i < p.m; ++i) {
        if (e(i) < -fit_tol) return false;
        if (slack(i) < -atol && std::abs(e(i)) > fit_tol) return false;
      }
      return true;
    };
    if (k < q.eta.size() && supported(q.eta[k])) {
      Vec e = q.eta[k].cwiseMax(0.0);
      for (int i = 0; i < p.m; ++i)
        if (slack(i) < -atol) e(i) = 0.0;
      const double r = (target - q.a[k].transpose() * e).norm();
      if (r <= fit_tol) {
        residual = std::max(residual, r);
        eta.push_back(e);
        continue;
      }
    }
    std::vector<int> act;
    for (int i = 0; i < p.m; ++i)
      if (slack(i) >= -atol) act.push_back(i);
    Vec e = Vec::Zero(p.m);
    double r = target.norm();
    if (!act.empty()) {
      Mat cols(p.n, static_cast<Eigen::Index>(act.size()));
      for (std::size_t c = 0; c < act.size(); ++c) cols.col(static_cast<Eigen::Index>(c)) = q.a[k].row(act[c]).transpose();
      const NnlsResult fit = nnls_min_norm(cols, target);
      for (std::size_t c = 0; c < act.size(); ++c) e(act[c]) = fit.x(static_cast<Eigen::Index>(c));
      r = fit.residual;
    }
    if (r > fit_tol)
      throw Error(ErrorKind::PrimalInfeasible,
                  "no eta >= 0 on the active rows reproduces step " + std::to_string(j) + " (residual " + std::to_string(r) + ")");
    residual = std::max(residual, r);
    eta.push_back(e);
  }
  return eta;
}

std::vector<Subgradients> default_subgradients(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  const RunningCost& ell = dp.base.ell;
  std::vector<Subgradients> out;
  for (int j = 0; j < dp.nu(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    Subgradients s;
    s.wx = ell.grad_block(RunningCost::X, q.x[k]);
    s.wa = ell.grad_block(RunningCost::A, flatten_rows(q.a[k]));
    s.wb = ell.grad_block(RunningCost::B, q.b[k]);
    s.wu = ell.grad_block(RunningCost::U, q.u[k]);
    s.vx = ell.grad_block(RunningCost::XDot, q.velocity(j));
    s.va = ell.grad_block(RunningCost::ADot, q.adot(j));
    s.vb = ell.grad_block(RunningCost::BDot, q.bdot(j));
    out.push_back(std::move(s));
  }
  return out;
}

void check_subgradients(const DiscreteProblem& dp, const std::vector<Subgradients>& sg) {
  const SweepingProblem& p = dp.base;
  if (static_cast<int>(sg.size()) != dp.nu()) throw Error(ErrorKind::DimensionMismatch, "need one subgradient selection per step");
  for (const Subgradients& s : sg)
    if (s.wx.size() != p.n || s.vx.size() != p.n || s.wa.size() != p.m * p.n || s.va.size() != p.m * p.n ||
        s.wb.size() != p.m || s.vb.size() != p.m || s.wu.size() != p.d)
      throw Error(ErrorKind::DimensionMismatch, "subgradient selection has wrong shape");
}

// [v, a]-type block: K(i n + k, i) = rows(i, k).
Mat row_spread(const Mat& rows) {
  const Eigen::Index m = rows.rows(), n = rows.cols();
  Mat k = Mat::Zero(m * n, m);
  for (Eigen::Index i = 0; i < m; ++i) k.block(i * n, i, n, 1) = rows.row(i).transpose();
  return k;
}

// [v, rep x]-type block: K(i n + k, i) = x_k.
Mat rep_spread(const Vec& x, Eigen::Index m) {
  const Eigen::Index n = x.size();
  Mat k = Mat::Zero(m * n, m);
  for (Eigen::Index i = 0; i < m; ++i) k.block(i * n, i, n, 1) = x;
  return k;
}

struct Builder {
  std::vector<std::tuple<int, int, double>> entries;
  std::vector<double> constant;
  std::vector<ConditionRow> rows;

  int add(int count, const std::string& family, const std::string& label, ConditionRow::Sense sense = ConditionRow::Sense::Eq) {
    const int r0 = static_cast<int>(rows.size());
    for (int r = 0; r < count; ++r) {
      rows.push_back({family, count > 1 ? label + "[" + std::to_string(r) + "]" : label, sense});
      constant.push_back(0.0);
    }
    return r0;
  }
  void put(int r, int c, double v) {
    if (v != 0.0) entries.emplace_back(r, c, v);
  }
  void block(int r0, int c0, const Mat& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index k = 0; k < m.cols(); ++k) put(r0 + static_cast<int>(i), c0 + static_cast<int>(k), m(i, k));
  }
  void diag(int r0, int c0, int len, double s) {
    for (int i = 0; i < len; ++i) put(r0 + i, c0 + i, s);
  }
  void column(int r0, int c, const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put(r0 + static_cast<int>(i), c, v(i));
  }
};

}  // namespace

Vec DualCertificate::y(const DiscreteProblem& dp, const DiscreteQuadruple& q, int j) const {
  const ThetaTerms th = theta_terms(dp, q);
  const auto k = static_cast<std::size_t>(j);
  return -(lambda / dp.mesh.h(j)) * th.x[k] - lambda * subgradients[k].vx + px[k + 1];
}

double DualCertificate::ntc_sum() const {
  double s = lambda;
  for (std::size_t j = 0; j < alpha1.size(); ++j) s += (alpha1[j] + alpha2[j]).lpNorm<1>();
  if (!eta.empty()) s += eta.back().lpNorm<1>();
  for (std::size_t j = 0; j + 1 < px.size(); ++j) s += px[j].lpNorm<1>();
  if (!pa.empty()) s += pa.front().lpNorm<1>();
  if (!pb.empty()) s += pb.front().lpNorm<1>();
  for (const Vec& v : psi) s += v.lpNorm<1>();
  return s;
}

double DualCertificate::ntc1_sum() const {
  double s = lambda;
  for (std::size_t j = 0; j < alpha1.size(); ++j) s += (alpha1[j] + alpha2[j]).lpNorm<1>();
  for (const Vec& g : gamma) s += g.lpNorm<1>();
  return s;
}

DualCertificate normalize(const DualCertificate& cert) {
  const double s = cert.mode == CertifyMode::Th72 ? cert.ntc1_sum() : cert.ntc_sum();
  if (!(s > 0.0)) return cert;
  DualCertificate out = cert;
  out.lambda /= s;
  if (!out.eta.empty()) out.eta.back() /= s;  // xi; the step etas are primal data
  for (auto* group : {&out.gamma, &out.px, &out.pa, &out.pb, &out.psi, &out.alpha1, &out.alpha2})
    for (Vec& v : *group) v /= s;
  return out;
}

int ConditionSystem::index(const std::string& name) const {
  for (std::size_t k = 0; k < var_names.size(); ++k)
    if (var_names[k] == name) return static_cast<int>(k);
  throw Error(ErrorKind::InvalidArgument, "unknown certificate variable " + name);
}

Vec ConditionSystem::encode(const DualCertificate& cert) const {
  Vec z = Vec::Zero(num_vars());
  auto put = [&](int at, const Vec& v) { z.segment(at, v.size()) = v; };
  z(lam) = cert.lambda;
  for (int j = 0; j <= nu; ++j) put(px[static_cast<std::size_t>(j)], cert.px[static_cast<std::size_t>(j)]);
  if (decision) {
    for (int j = 0; j <= nu; ++j) {
      const auto k = static_cast<std::size_t>(j);
      put(pa[k], cert.pa[k]);
      put(pb[k], cert.pb[k]);
      put(a1[k], cert.alpha1[k]);
      put(a2[k], cert.alpha2[k]);
    }
  }
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    put(gamma[k], cert.gamma[k]);
    put(psi[k], cert.psi[k]);
    if (ball_scale[k] >= 0) z(ball_scale[k]) = ball_dir[k].dot(cert.psi[k]);
  }
  put(xi, cert.eta.back());
  return z;
}

DualCertificate ConditionSystem::decode(const Vec& z) const {
  DualCertificate c;
  c.mode = mode;
  c.lambda = z(lam);
  c.eta = eta;
  c.eta.push_back(z.segment(xi, m));
  for (int j = 0; j <= nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    c.px.push_back(z.segment(px[k], n));
    if (decision) {
      c.pa.push_back(z.segment(pa[k], m * n));
      c.pb.push_back(z.segment(pb[k], m));
      c.alpha1.push_back(z.segment(a1[k], m));
      c.alpha2.push_back(z.segment(a2[k], m));
    }
  }
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    c.gamma.push_back(z.segment(gamma[k], m));
    c.psi.push_back(z.segment(psi[k], d));
  }
  c.case_pattern = pattern;
  c.subgradients = subgradients;
  c.phi_gradient = phi_gradient;
  return c;
}

PatternSpace pattern_space(const DiscreteProblem& dp, const DiscreteQuadruple& q, const CertifyOptions& options) {
  dp.validate();
  check_quadruple(dp, q);
  double residual = 0.0;
  const std::vector<Vec> eta = primal_eta(dp, q, options.tol, residual);
  PatternSpace ps;
  for (int j = 0; j < dp.nu(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec slack = q.a[k] * q.x[k] - q.b[k];
    const double atol = activity_tol(q, j, options.tol);
    const double etol = options.tol * (1.0 + eta[k].norm());
    std::vector<GammaCase> row;
    for (int i = 0; i < dp.base.m; ++i) {
      if (slack(i) < -atol) {
        row.push_back(GammaCase::Inactive);
      } else if (eta[k](i) > etol) {
        row.push_back(GammaCase::Riding);
      } else {
        row.push_back(GammaCase::Free);
        ps.ambiguous.emplace_back(j, i);
      }
    }
    ps.forced.push_back(std::move(row));
  }
  return ps;
}

ConditionSystem assemble_conditions(const DiscreteProblem& dp, const DiscreteQuadruple& q,
                                    const std::vector<std::vector<GammaCase>>& pattern, const CertifyOptions& options) {
  const PatternSpace ps = pattern_space(dp, q, options);
  const SweepingProblem& p = dp.base;
  const int nu = dp.nu(), n = p.n, m = p.m, d = p.d;
  const CertifyMode mode = options.mode;

  if (static_cast<int>(pattern.size()) != nu) throw Error(ErrorKind::DimensionMismatch, "case pattern needs one row per step");
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    if (static_cast<int>(pattern[k].size()) != m) throw Error(ErrorKind::DimensionMismatch, "case pattern needs one entry per row");
    for (int i = 0; i < m; ++i) {
      const GammaCase forced = ps.forced[k][static_cast<std::size_t>(i)], got = pattern[k][static_cast<std::size_t>(i)];
      const bool ambiguous = forced == GammaCase::Free;
      const bool ok = ambiguous ? (got == GammaCase::Zero || got == GammaCase::Nonneg || got == GammaCase::Free) : got == forced;
      if (!ok)
        throw Error(ErrorKind::InvalidArgument, "case " + std::string(to_string(got)) + " at step " + std::to_string(j) + " row " +
                                                    std::to_string(i) + " contradicts the primal data");
    }
  }

  ConditionSystem sys;
  sys.mode = mode;
  sys.decision = p.moving.kind == MovingSet::Kind::Decision;
  sys.nu = nu;
  sys.n = n;
  sys.m = m;
  sys.d = d;
  sys.pattern = pattern;
  sys.eta = primal_eta(dp, q, options.tol, sys.primal_residual);
  sys.theta = theta_terms(dp, q);
  sys.subgradients = options.subgradients ? *options.subgradients : default_subgradients(dp, q);
  check_subgradients(dp, sys.subgradients);
  sys.phi_gradient = options.phi_subgradient ? *options.phi_subgradient : p.phi.grad(q.x.back());
  if (sys.phi_gradient.size() != n) throw Error(ErrorKind::DimensionMismatch, "terminal subgradient has wrong length");

  std::vector<double> lo, hi;
  auto add = [&](const std::string& name, const std::string& family, double l, double h) {
    sys.var_names.push_back(name);
    sys.var_family.push_back(family_of(mode, family));
    lo.push_back(l);
    hi.push_back(h);
    return static_cast<int>(sys.var_names.size()) - 1;
  };
  auto add_block = [&](const std::string& base, int j, int len, const std::string& family, double l, double h) {
    const int first = static_cast<int>(sys.var_names.size());
    for (int c = 0; c < len; ++c) add(idx(base, j, c), family, l, h);
    return first;
  };

  sys.lam = add("lambda", "signs", 0.0, kInf);
  for (int j = 0; j <= nu; ++j) sys.px.push_back(add_block("px", j, n, "signs", -kInf, kInf));
  if (sys.decision) {
    for (int j = 0; j <= nu; ++j) {
      const auto k = static_cast<std::size_t>(j);
      sys.pa.push_back(add_block("pa", j, m * n, "signs", -kInf, kInf));
      sys.pb.push_back(add_block("pb", j, m, "signs", -kInf, kInf));
      const int f1 = static_cast<int>(sys.var_names.size());
      for (int i = 0; i < m; ++i) {
        const double nr = q.a[k].row(i).norm();
        const bool upper = nr >= 1.0 + dp.delta_k - options.tol * (1.0 + nr);
        add(idx("alpha1", j, i), upper ? "signs" : "complementarity", 0.0, upper ? kInf : 0.0);
      }
      sys.a1.push_back(f1);
      const int f2 = static_cast<int>(sys.var_names.size());
      for (int i = 0; i < m; ++i) {
        const double nr = q.a[k].row(i).norm();
        const bool lower = nr <= 1.0 - dp.delta_k + options.tol * (1.0 + nr);
        add(idx("alpha2", j, i), lower ? "signs" : "complementarity", lower ? -kInf : 0.0, 0.0);
      }
      sys.a2.push_back(f2);
    }
  }
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const int first = static_cast<int>(sys.var_names.size());
    for (int i = 0; i < m; ++i) {
      double l = -kInf, h = kInf;
      switch (pattern[k][static_cast<std::size_t>(i)]) {
        case GammaCase::Inactive:
        case GammaCase::Zero: l = h = 0.0; break;
        case GammaCase::Nonneg: l = 0.0; break;
        case GammaCase::Riding:
        case GammaCase::Free: break;
      }
      add(idx("gamma", j, i), "gamma_rule", l, h);
    }
    sys.gamma.push_back(first);
  }
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const ControlSet& set = dp.control_set(j);
    const Vec& u = q.u[k];
    const int first = static_cast<int>(sys.var_names.size());
    int scale = -1;
    Vec dir;
    // A pinned u_0 turns U into the single point u_0 on the first step.
    const ControlSet::Kind kind = (j == 0 && dp.pinned_u0()) ? ControlSet::Kind::Finite : set.kind();
    switch (kind) {
      case ControlSet::Kind::Box:
        for (int c = 0; c < d; ++c) {
          const double l = set.lower()(c), h = set.upper()(c);
          const double ftol = options.tol * (1.0 + std::abs(u(c)));
          double bl = 0.0, bh = 0.0;
          if (h - l <= ftol) {
            bl = -kInf;
            bh = kInf;
          } else if (u(c) <= l + ftol) {
            bl = -kInf;
          } else if (u(c) >= h - ftol) {
            bh = kInf;
          }
          add(idx("psi", j, c), "normal_cone_u", bl, bh);
        }
        break;
      case ControlSet::Kind::Ball: {
        add_block("psi", j, d, "normal_cone_u", -kInf, kInf);
        dir = (u - set.center()) / set.radius();
        const bool boundary = std::abs(dir.norm() - 1.0) <= options.tol * (1.0 + u.norm());
        scale = add(idx("ball_scale", j), "normal_cone_u", 0.0, boundary ? kInf : 0.0);
        if (!boundary) dir = Vec::Zero(d);
        break;
      }
      case ControlSet::Kind::Finite:
        // Every point of a finite set is isolated, so its normal cone is the whole space.
        add_block("psi", j, d, "normal_cone_u", -kInf, kInf);
        break;
    }
    sys.psi.push_back(first);
    sys.ball_scale.push_back(scale);
    sys.ball_dir.push_back(dir);
  }
  {
    const Vec slack = q.a.back() * q.x.back() - q.b.back();
    const double atol = activity_tol(q, nu, options.tol);
    const int first = static_cast<int>(sys.var_names.size());
    for (int i = 0; i < m; ++i) {
      const bool active = slack(i) >= -atol;
      add(idx("xi", i), active ? "signs" : "complementarity", 0.0, active ? kInf : 0.0);
    }
    sys.xi = first;
  }
  sys.lower = Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  sys.upper = Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()));

  Builder b;
  const Mat gx_t = p.g.gx().transpose(), gu_t = p.g.gu().transpose();
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const double h = dp.mesh.h(j);
    const Subgradients& sg = sys.subgradients[k];
    const Mat& a = q.a[k];
    // y_j = px_{j+1} + lambda * ylam.
    const Vec ylam = -sys.theta.x[k] / h - sg.vx;
    const std::string tag = "@" + std::to_string(j);

    int r = b.add(n, family_of(mode, "adjoint_x"), "conx" + tag);
    b.diag(r, sys.px[k + 1], n, 1.0 / h);
    b.diag(r, sys.px[k], n, -1.0 / h);
    b.column(r, sys.lam, -sg.wx + gx_t * ylam);
    b.block(r, sys.px[k + 1], gx_t);
    b.block(r, sys.gamma[k], -a.transpose());

    if (sys.decision) {
      const Mat ka = row_spread(a), kx = rep_spread(q.x[k], m);
      Mat ey = Mat::Zero(m * n, n);
      for (int i = 0; i < m; ++i) ey.block(i * n, 0, n, n) = sys.eta[k](i) * Mat::Identity(n, n);
      r = b.add(m * n, family_of(mode, "adjoint_a"), "cona" + tag);
      b.diag(r, sys.pa[k + 1], m * n, 1.0 / h);
      b.diag(r, sys.pa[k], m * n, -1.0 / h);
      b.column(r, sys.lam, -sg.wa - ey * ylam);
      b.block(r, sys.a1[k], -(2.0 / h) * ka);
      b.block(r, sys.a2[k], -(2.0 / h) * ka);
      b.block(r, sys.gamma[k], -kx);
      b.block(r, sys.px[k + 1], -ey);

      r = b.add(m, family_of(mode, "adjoint_b"), "conb" + tag);
      b.diag(r, sys.pb[k + 1], m, 1.0 / h);
      b.diag(r, sys.pb[k], m, -1.0 / h);
      b.column(r, sys.lam, -sg.wb);
      b.diag(r, sys.gamma[k], m, 1.0);

      r = b.add(m * n, family_of(mode, "p_closure"), "pa" + tag);
      b.diag(r, sys.pa[k + 1], m * n, 1.0);
      b.column(r, sys.lam, -(sg.va + sys.theta.a[k] / h));
      r = b.add(m, family_of(mode, "p_closure"), "pb" + tag);
      b.diag(r, sys.pb[k + 1], m, 1.0);
      b.column(r, sys.lam, -(sg.vb + sys.theta.b[k] / h));
    }

    r = b.add(d, family_of(mode, "max_principle"), "cony" + tag);
    b.diag(r, sys.psi[k], d, -1.0 / h);
    b.column(r, sys.lam, -sys.theta.u[k] / h - sg.wu + gu_t * ylam);
    b.block(r, sys.px[k + 1], gu_t);

    if (sys.ball_scale[k] >= 0) {
      r = b.add(d, family_of(mode, "normal_cone_u"), "ball" + tag);
      b.diag(r, sys.psi[k], d, 1.0);
      b.column(r, sys.ball_scale[k], -sys.ball_dir[k]);
    }

    for (int i = 0; i < m; ++i) {
      ConditionRow::Sense sense = ConditionRow::Sense::Eq;
      switch (pattern[k][static_cast<std::size_t>(i)]) {
        case GammaCase::Inactive: continue;
        case GammaCase::Zero: sense = ConditionRow::Sense::Le; break;
        case GammaCase::Nonneg: sense = ConditionRow::Sense::Ge; break;
        case GammaCase::Riding:
        case GammaCase::Free: sense = ConditionRow::Sense::Eq; break;
      }
      r = b.add(1, family_of(mode, "gamma_rule"),
                "<a,y>" + tag + "[" + std::to_string(i) + "]", sense);
      b.block(r, sys.px[k + 1], a.row(i));
      b.put(r, sys.lam, a.row(i).dot(ylam));
    }
  }

  const Mat& an = q.a.back();
  int r = b.add(n, "transversality", "mutx");
  b.diag(r, sys.px[static_cast<std::size_t>(nu)], n, -1.0);
  b.column(r, sys.lam, -sys.phi_gradient);
  b.block(r, sys.xi, -an.transpose());
  if (sys.decision) {
    const auto kn = static_cast<std::size_t>(nu);
    const Mat ka = row_spread(an), kx = rep_spread(q.x.back(), m);
    r = b.add(m * n, "transversality", "muta");
    b.diag(r, sys.pa[kn], m * n, 1.0);
    b.block(r, sys.a1[kn], 2.0 * ka);
    b.block(r, sys.a2[kn], 2.0 * ka);
    b.block(r, sys.xi, kx);
    r = b.add(m, "transversality", "mutb");
    b.diag(r, sys.pb[kn], m, 1.0);
    b.diag(r, sys.xi, m, -1.0);
  }

  sys.rows = std::move(b.rows);
  sys.coeffs = Mat::Zero(static_cast<Eigen::Index>(sys.rows.size()), sys.num_vars());
  for (const auto& [row, col, v] : b.entries) sys.coeffs(row, col) += v;
  sys.constant = Eigen::Map<const Vec>(b.constant.data(), static_cast<Eigen::Index>(b.constant.size()));
  return sys;
}

namespace {

struct LpOutcome {
  bool ok = false;
  double residual = kInf;
  Vec z;
};

// min t subject to |row| <= t (one-sided for inequality rows), with the
// variable bounds of the system and optional overrides.
LpOutcome min_residual(const ConditionSystem& sys, const std::map<int, double>& pins) {
  lp::Problem prob;
  const int nv = sys.num_vars();
  for (int k = 0; k < nv; ++k) {
    const auto it = pins.find(k);
    if (it != pins.end())
      prob.add_variable(it->second, it->second);
    else
      prob.add_variable(sys.lower(k), sys.upper(k));
  }
  const int t = prob.add_variable(0.0, kInf, 1.0);
  for (Eigen::Index r = 0; r < sys.coeffs.rows(); ++r) {
    std::vector<lp::Problem::Entry> e;
    for (int k = 0; k < nv; ++k)
      if (sys.coeffs(r, k) != 0.0) e.emplace_back(k, sys.coeffs(r, k));
    const double c = sys.constant(r);
    const ConditionRow::Sense s = sys.rows[static_cast<std::size_t>(r)].sense;
    if (s != ConditionRow::Sense::Ge) {
      auto le = e;
      le.emplace_back(t, -1.0);
      prob.add_row(std::move(le), -kInf, -c);
    }
    if (s != ConditionRow::Sense::Le) {
      auto ge = e;
      ge.emplace_back(t, 1.0);
      prob.add_row(std::move(ge), -c, kInf);
    }
  }
  const lp::Result res = lp::solve(prob);
  LpOutcome out;
  if (res.status != lp::Status::Optimal) return out;
  out.ok = true;
  out.z = res.x.head(nv);
  out.residual = std::max(0.0, res.x(t));
  return out;
}

}  // namespace

CertificateSearch find_certificate(const DiscreteProblem& dp, const DiscreteQuadruple& q, const CertifyOptions& options) {
  const PatternSpace ps = pattern_space(dp, q, options);
  CertificateSearch out;
  out.ambiguous_cells = static_cast<long>(ps.ambiguous.size());
  long total = 1;
  for (std::size_t c = 0; c < ps.ambiguous.size(); ++c) {
    if (total > options.max_patterns / 3 + 1) {
      total = options.max_patterns + 1;
      break;
    }
    total *= 3;
  }
  if (total > options.max_patterns) {
    out.budget_exceeded = true;
    total = options.max_patterns;
  }
  static const GammaCase branches[3] = {GammaCase::Zero, GammaCase::Nonneg, GammaCase::Free};
  auto pattern_at = [&](long code) {
    auto pat = ps.forced;
    for (const auto& [j, i] : ps.ambiguous) {
      pat[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = branches[code % 3];
      code /= 3;
    }
    return pat;
  };

  LpOutcome best;
  std::optional<ConditionSystem> best_sys;
  bool abnormal = false;
  for (long code = 0; code < total; ++code) {
    ConditionSystem sys = assemble_conditions(dp, q, pattern_at(code), options);
    const LpOutcome o = min_residual(sys, {{sys.lam, 1.0}});
    ++out.patterns_tried;
    out.patterns.push_back(sys.pattern);
    out.pattern_residuals.push_back(o.residual);
    if (o.ok && (!best.ok || o.residual < best.residual)) {
      best = o;
      best_sys = std::move(sys);
    }
    if (!options.exhaustive && best.ok && best.residual <= 1e-3 * options.tol) break;
  }
  if (options.allow_abnormal && !(best.ok && best.residual <= options.tol)) {
    for (long code = 0; code < total; ++code) {
      const ConditionSystem sys = assemble_conditions(dp, q, pattern_at(code), options);
      // Pin lambda = 0 and one coordinate of the (ntc1) quantities to +-1.
      std::vector<std::pair<int, double>> pins;
      for (int j = 0; j < sys.nu; ++j)
        for (int i = 0; i < sys.m; ++i) {
          const int v = sys.gamma[static_cast<std::size_t>(j)] + i;
          if (sys.upper(v) > 0.0) pins.emplace_back(v, 1.0);
          if (sys.lower(v) < 0.0) pins.emplace_back(v, -1.0);
        }
      if (sys.decision)
        for (int j = 0; j <= sys.nu; ++j)
          for (int i = 0; i < sys.m; ++i) {
            const int v1 = sys.a1[static_cast<std::size_t>(j)] + i, v2 = sys.a2[static_cast<std::size_t>(j)] + i;
            if (sys.upper(v1) > 0.0) pins.emplace_back(v1, 1.0);
            if (sys.lower(v2) < 0.0) pins.emplace_back(v2, -1.0);
          }
      for (const auto& [v, s] : pins) {
        const LpOutcome o = min_residual(sys, {{sys.lam, 0.0}, {v, s}});
        if (o.ok && (!best.ok || o.residual < best.residual)) {
          best = o;
          best_sys = sys;
          abnormal = true;
        }
      }
    }
  }
  if (!best.ok || !best_sys) throw Error(ErrorKind::PrimalInfeasible, "no case pattern gives a solvable condition system");
  out.residual = best.residual;
  DualCertificate cert = best_sys->decode(best.z);
  cert.abnormal = abnormal;
  out.certificate = normalize(cert);
  out.normalized_residual = check_certificate(dp, q, out.certificate, options).max_residual;
  return out;
}

double CertificateReport::family(const std::string& name) const {
  for (const FamilyResidual& f : families)
    if (f.family == name) return f.residual;
  throw Error(ErrorKind::InvalidArgument, "no condition family " + name);
}

CertificateReport check_certificate(const DiscreteProblem& dp, const DiscreteQuadruple& q, const DualCertificate& cert,
                                    const CertifyOptions& options) {
  const SweepingProblem& p = dp.base;
  check_quadruple(dp, q);
  const int nu = dp.nu(), n = p.n, m = p.m, d = p.d;
  const bool decision = p.moving.kind == MovingSet::Kind::Decision;
  auto sized = [](const std::vector<Vec>& v, int count, int len) {
    if (static_cast<int>(v.size()) != count) return false;
    for (const Vec& x : v)
      if (x.size() != len) return false;
    return true;
  };
  bool ok = sized(cert.eta, nu + 1, m) && sized(cert.gamma, nu, m) && sized(cert.px, nu + 1, n) && sized(cert.psi, nu, d) &&
            static_cast<int>(cert.case_pattern.size()) == nu && static_cast<int>(cert.subgradients.size()) == nu &&
            cert.phi_gradient.size() == n;
  if (decision)
    ok = ok && sized(cert.pa, nu + 1, m * n) && sized(cert.pb, nu + 1, m) && sized(cert.alpha1, nu + 1, m) &&
         sized(cert.alpha2, nu + 1, m);
  else
    ok = ok && cert.pa.empty() && cert.pb.empty() && cert.alpha1.empty() && cert.alpha2.empty();
  if (!ok) throw Error(ErrorKind::DimensionMismatch, "certificate dimensions do not match the problem");

  CertifyOptions opts = options;
  opts.mode = cert.mode;
  opts.subgradients = cert.subgradients;
  opts.phi_subgradient = cert.phi_gradient;
  const ConditionSystem sys = assemble_conditions(dp, q, cert.case_pattern, opts);
  const CertifyMode mode = cert.mode;

  std::vector<FamilyResidual> fams;
  auto charge = [&](const std::string& name, double v) {
    for (FamilyResidual& f : fams)
      if (f.family == name) {
        f.residual = std::max(f.residual, v);
        return;
      }
    fams.push_back({name, v});
  };
  std::vector<std::string> order = {"primal_arc"};
  if (mode == CertifyMode::Th72) {
    order.insert(order.end(), {"adjoint_x"});
    if (decision) order.insert(order.end(), {"adjoint_a", "adjoint_b", "p_closure"});
    order.insert(order.end(), {"max_principle", "gmp"});
  } else {
    order.push_back("graph_normal");
    if (decision) order.push_back("p_closure");
    order.push_back("psi");
  }
  order.insert(order.end(), {"transversality", "complementarity", "signs", "nontriviality"});
  for (const std::string& f : order) charge(f, 0.0);

  const Vec z = sys.encode(cert);
  const Vec vals = sys.evaluate(z);
  for (std::size_t r = 0; r < sys.rows.size(); ++r) {
    const double v = vals(static_cast<Eigen::Index>(r));
    double res = 0.0;
    switch (sys.rows[r].sense) {
      case ConditionRow::Sense::Eq: res = std::abs(v); break;
      case ConditionRow::Sense::Le: res = std::max(0.0, v); break;
      case ConditionRow::Sense::Ge: res = std::max(0.0, -v); break;
    }
    charge(sys.rows[r].family, res);
  }
  for (int k = 0; k < sys.num_vars(); ++k)
    charge(sys.var_family[static_cast<std::size_t>(k)], std::max({0.0, sys.lower(k) - z(k), z(k) - sys.upper(k)}));

  const std::string gmp = mode == CertifyMode::Th72 ? "gmp" : "psi";
  for (int j = 0; j < nu; ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec& e = cert.eta[k];
    charge("primal_arc", (q.velocity(j) - p.g.eval(q.x[k], q.u[k]) + q.a[k].transpose() * e).norm());
    charge("signs", std::max(0.0, -e.minCoeff()));
    const Vec slack = q.a[k] * q.x[k] - q.b[k];
    charge("complementarity", e.cwiseProduct(slack).cwiseAbs().maxCoeff());
    const ControlSet& set = dp.control_set(j);
    if (j == 0 && dp.pinned_u0()) continue;
    if (set.kind() != ControlSet::Kind::Finite || set.points().size() == 1)
      charge(gmp, std::max(0.0, set.support(cert.psi[k]) - cert.psi[k].dot(q.u[k])));
  }
  {
    const Vec& xi = cert.eta.back();
    const Vec slack = q.a.back() * q.x.back() - q.b.back();
    charge("complementarity", xi.cwiseProduct(slack).cwiseAbs().maxCoeff());
  }

  CertificateReport rep;
  rep.ntc_sum = cert.ntc_sum();
  rep.ntc1_sum = cert.ntc1_sum();
  const double floor = 1e-12;
  const bool nontrivial = mode == CertifyMode::Th72 ? (rep.ntc_sum > floor && rep.ntc1_sum > floor) : rep.ntc_sum > floor;
  charge("nontriviality", nontrivial ? 0.0 : 1.0);
  rep.families = std::move(fams);
  for (const FamilyResidual& f : rep.families) rep.max_residual = std::max(rep.max_residual, f.residual);
  return rep;
}

}  // namespace polysweep
