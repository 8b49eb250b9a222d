#include "polysweep/coderivatives.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "polysweep/errors.hpp"
#include "polysweep/nnls.hpp"

namespace polysweep {

bool CoderivDescriptor::contains(const Vec& gamma, double tol) const {
  if (empty()) return false;
  for (int i : zero_indices)
    if (std::abs(gamma(i)) > tol) return false;
  for (int i : nonneg_indices)
    if (gamma(i) < -tol) return false;
  return true;
}

CoderivDescriptor coderiv_orthant(const Vec& x, const Vec& v, const Vec& w, double tol) {
  if (x.size() != v.size() || x.size() != w.size()) throw Error(ErrorKind::DimensionMismatch, "orthant arguments differ in length");
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > tol || v(i) < -tol || std::abs(x(i) * v(i)) > tol)
      throw Error(ErrorKind::NotInGraph, "component " + std::to_string(i) + " is off the graph of the orthant normal cone");
  }
  CoderivDescriptor d;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (v(i) > tol && std::abs(w(i)) > tol) {
      d.status = DescriptorStatus::Empty;
      d.zero_indices.clear();
      d.nonneg_indices.clear();
      d.free_indices.clear();
      return d;
    }
    const int idx = static_cast<int>(i);
    const bool at_zero = x(i) >= -tol;
    const bool v_zero = v(i) <= tol;
    if (!at_zero || (v_zero && w(i) < -tol)) {
      d.zero_indices.push_back(idx);
    } else if (v_zero && w(i) > tol) {
      d.nonneg_indices.push_back(idx);
    } else {
      d.free_indices.push_back(idx);
    }
  }
  return d;
}

std::vector<Vec> admissible_multipliers(const Polyhedron& p, const Vec& x, const Vec& v, double tol) {
  const ActiveSet act = active_set(p, x, tol);
  const double fit_tol = tol >= 0.0 ? tol : act.tolerance * (1.0 + v.norm());
  std::vector<Vec> out;
  out.push_back(normal_cone_multipliers(p, x, v, tol));
  auto push_unique = [&](const Vec& cand) {
    for (const Vec& e : out)
      if ((e - cand).norm() <= 1e-10 * (1.0 + cand.norm())) return;
    out.push_back(cand);
  };
  const int k = static_cast<int>(act.indices.size());
  if (p.m() > 8 || k == 0) return out;
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> sub;
    for (int b = 0; b < k; ++b)
      if (mask & (1u << b)) sub.push_back(act.indices[static_cast<std::size_t>(b)]);
    if (static_cast<int>(sub.size()) > p.n()) continue;
    Mat cols(p.n(), static_cast<Eigen::Index>(sub.size()));
    for (std::size_t c = 0; c < sub.size(); ++c) cols.col(static_cast<Eigen::Index>(c)) = p.rows().row(sub[c]).transpose();
    Eigen::ColPivHouseholderQR<Mat> qr(cols);
    if (qr.rank() < cols.cols()) continue;
    const Vec ps = qr.solve(v);
    if ((cols * ps - v).norm() > fit_tol) continue;
    if (ps.minCoeff() < -fit_tol) continue;
    Vec full = Vec::Zero(p.m());
    for (std::size_t c = 0; c < sub.size(); ++c) full(sub[c]) = std::max(0.0, ps(static_cast<Eigen::Index>(c)));
    push_unique(full);
  }
  return out;
}

namespace {

// min over q in the descriptor of |target - L q|.
double fit_q(const CoderivDescriptor& d, const Mat& l, const Vec& target, Vec& q) {
  const Eigen::Index m = l.cols();
  q = Vec::Zero(m);
  const std::size_t cols = d.nonneg_indices.size() + 2 * d.free_indices.size();
  if (cols == 0) return target.norm();
  Mat mat(l.rows(), static_cast<Eigen::Index>(cols));
  Eigen::Index c = 0;
  for (int i : d.nonneg_indices) mat.col(c++) = l.col(i);
  for (int i : d.free_indices) {
    mat.col(c++) = l.col(i);
    mat.col(c++) = -l.col(i);
  }
  const NnlsResult r = nnls(mat, target);
  c = 0;
  for (int i : d.nonneg_indices) q(i) = r.x(c++);
  for (int i : d.free_indices) {
    q(i) = r.x(c) - r.x(c + 1);
    c += 2;
  }
  return (target - l * q).norm();
}

struct Layout {
  Mat l;                                  // q -> stacked output
  std::function<Vec(const Vec&)> offset;  // p -> stacked output at q = 0
};

MembershipResult search(const Polyhedron& p, const Vec& x, const Vec& v, const Vec& direction, const Layout& layout,
                        const Vec& candidate, double tol) {
  if (candidate.size() != layout.l.rows())
    throw Error(ErrorKind::DimensionMismatch, "candidate has length " + std::to_string(candidate.size()) + ", expected " +
                                                  std::to_string(layout.l.rows()));
  const PlicqReport plicq = check_plicq(p, x, tol);
  if (!plicq.holds) throw Error(ErrorKind::PLICQViolation, "active rows are positively dependent");
  const std::vector<Vec> ps = admissible_multipliers(p, x, v, tol);
  const double gtol = resolve_tolerance(p, x, tol);
  Vec slack = p.slack(x);
  for (Eigen::Index i = 0; i < slack.size(); ++i)
    if (std::abs(slack(i)) <= gtol) slack(i) = 0.0;
  const Vec adir = p.rows() * direction;

  MembershipResult out;
  out.residual = std::numeric_limits<double>::infinity();
  out.empty = true;
  out.p_candidates = static_cast<int>(ps.size());
  for (const Vec& pm : ps) {
    const CoderivDescriptor d = coderiv_orthant(slack, pm, adir, gtol * (1.0 + direction.norm()));
    if (d.empty()) continue;
    out.empty = false;
    const Vec base = layout.offset(pm);
    Vec q;
    const double r = fit_q(d, layout.l, candidate - base, q);
    if (r < out.residual - 1e-14) {
      out.residual = r;
      out.p = pm;
      out.q = q;
      out.nearest = base + layout.l * q;
    }
  }
  return out;
}

Mat q_map(const Polyhedron& p, const Vec& x, Eigen::Index extra) {
  const int n = p.n(), m = p.m();
  Mat l = Mat::Zero(n + m * n + m + extra, m);
  for (int i = 0; i < m; ++i) {
    l.block(0, i, n, 1) = p.rows().row(i).transpose();
    l.block(n + i * n, i, n, 1) = x;
    l(n + m * n + i, i) = -1.0;
  }
  return l;
}

}  // namespace

Vec stacked_G(const Polyhedron& p, const Vec& x, const Vec& w, const Vec& pm, const Vec& q) {
  const int n = p.n(), m = p.m();
  Vec out = q_map(p, x, 0) * q;
  for (int i = 0; i < m; ++i) out.segment(n + i * n, n) += pm(i) * w;
  return out;
}

Vec stacked_F(const Polyhedron& p, const PerturbationJet& g, const Vec& x, const Vec& y, const Vec& pm, const Vec& q) {
  const int n = p.n(), m = p.m();
  const Eigen::Index d = g.ju.cols();
  Vec out = q_map(p, x, d) * q;
  out.head(n) -= g.jx.transpose() * y;
  for (int i = 0; i < m; ++i) out.segment(n + i * n, n) += pm(i) * y;
  out.tail(d) -= g.ju.transpose() * y;
  return out;
}

MembershipResult coderiv_G_membership(const Polyhedron& p, const Vec& x, const Vec& v, const Vec& w,
                                      const Vec& candidate, double tol) {
  if (x.size() != p.n() || v.size() != p.n() || w.size() != p.n())
    throw Error(ErrorKind::DimensionMismatch, "coderivative arguments must live in R^n");
  Layout layout;
  layout.l = q_map(p, x, 0);
  layout.offset = [&](const Vec& pm) { return stacked_G(p, x, w, pm, Vec::Zero(p.m())); };
  return search(p, x, v, w, layout, candidate, tol);
}

MembershipResult coderiv_F_membership(const Polyhedron& p, const PerturbationJet& g, const Vec& x, const Vec& w,
                                      const Vec& y, const Vec& candidate, double tol) {
  if (x.size() != p.n() || w.size() != p.n() || y.size() != p.n() || g.value.size() != p.n() || g.jx.rows() != p.n() ||
      g.jx.cols() != p.n() || g.ju.rows() != p.n())
    throw Error(ErrorKind::DimensionMismatch, "coderivative arguments must live in R^n");
  Layout layout;
  layout.l = q_map(p, x, g.ju.cols());
  layout.offset = [&](const Vec& pm) { return stacked_F(p, g, x, y, pm, Vec::Zero(p.m())); };
  return search(p, x, w + g.value, y, layout, candidate, tol);
}

}  // namespace polysweep
