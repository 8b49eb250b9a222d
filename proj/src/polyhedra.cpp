#include "polysweep/polyhedra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysweep/errors.hpp"
#include "polysweep/lp.hpp"
#include "polysweep/nnls.hpp"
#include "polysweep/qp.hpp"

namespace polysweep {

Polyhedron::Polyhedron(Mat rows, Vec offsets, std::optional<Band> norm_band)
    : rows_(std::move(rows)), offsets_(std::move(offsets)), norm_band_(norm_band) {
  if (rows_.rows() < 1 || rows_.cols() < 1) throw Error(ErrorKind::InvalidArgument, "polyhedron needs m >= 1 and n >= 1");
  if (offsets_.size() != rows_.rows()) throw Error(ErrorKind::DimensionMismatch, "offsets length differs from row count");
  if (!rows_.allFinite() || !offsets_.allFinite()) throw Error(ErrorKind::InvalidArgument, "polyhedron entries must be finite");
  if (norm_band_) {
    if (!(norm_band_->first <= norm_band_->second)) throw Error(ErrorKind::InvalidArgument, "norm band is empty");
    for (Eigen::Index i = 0; i < rows_.rows(); ++i)
      if (rows_.row(i).norm() == 0.0) throw Error(ErrorKind::InvalidArgument, "zero row with a norm band attached");
    if (!band_violations().empty()) throw Error(ErrorKind::InvalidArgument, "row norm outside the band");
  }
}

Vec Polyhedron::slack(const Vec& x) const {
  if (x.size() != rows_.cols()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from polyhedron");
  return rows_ * x - offsets_;
}

std::vector<int> Polyhedron::band_violations(double tol) const {
  std::vector<int> out;
  if (!norm_band_) return out;
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    const double r = rows_.row(i).norm();
    if (r < norm_band_->first - tol || r > norm_band_->second + tol) out.push_back(static_cast<int>(i));
  }
  return out;
}

bool ActiveSet::contains(int i) const { return std::binary_search(indices.begin(), indices.end(), i); }

double resolve_tolerance(const Polyhedron& p, const Vec& x, double tol) {
  return tol >= 0.0 ? tol : scaled_tolerance(x, p.offsets());
}

ActiveSet active_set(const Polyhedron& p, const Vec& x, double tol) {
  ActiveSet out;
  out.tolerance = resolve_tolerance(p, x, tol);
  const Vec s = p.slack(x);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > out.tolerance)
      throw Error(ErrorKind::InfeasiblePoint, "constraint " + std::to_string(i) + " violated by " + std::to_string(s(i)));
    if (std::abs(s(i)) <= out.tolerance) out.indices.push_back(static_cast<int>(i));
  }
  return out;
}

Projection project(const Polyhedron& p, const Vec& y) {
  if (y.size() != p.n()) throw Error(ErrorKind::DimensionMismatch, "point dimension differs from polyhedron");
  Projection out;
  const Vec s = p.slack(y);
  if (s.maxCoeff() <= 0.0) {
    out.x = y;
    out.multipliers = Vec::Zero(p.m());
    return out;
  }
  ProjectionQp qp;
  qp.g_mat = p.rows();
  qp.g_rhs = p.offsets();
  const ProjectionResult r = project_onto(qp, y);
  out.x = r.z;
  out.multipliers = r.ineq_multipliers;
  return out;
}

Vec normal_cone_multipliers(const Polyhedron& p, const Vec& x, const Vec& v, double tol) {
  if (v.size() != p.n()) throw Error(ErrorKind::DimensionMismatch, "vector dimension differs from polyhedron");
  const ActiveSet act = active_set(p, x, tol);
  const double fit_tol = tol >= 0.0 ? tol : act.tolerance * (1.0 + v.norm());
  Vec eta = Vec::Zero(p.m());
  if (act.empty()) {
    if (v.norm() > fit_tol)
      throw Error(ErrorKind::NotInNormalCone, "nonzero vector at a point with no active constraints");
    return eta;
  }
  Mat m(p.n(), static_cast<Eigen::Index>(act.indices.size()));
  for (std::size_t k = 0; k < act.indices.size(); ++k)
    m.col(static_cast<Eigen::Index>(k)) = p.rows().row(act.indices[k]).transpose();
  const NnlsResult fit = nnls_min_norm(m, v);
  if (fit.residual > fit_tol)
    throw Error(ErrorKind::NotInNormalCone, "least-squares residual " + std::to_string(fit.residual));
  for (std::size_t k = 0; k < act.indices.size(); ++k) eta(act.indices[k]) = fit.x(static_cast<Eigen::Index>(k));
  return eta;
}

PlicqReport check_plicq(const Polyhedron& p, const Vec& x, double tol) {
  PlicqReport out;
  out.active = active_set(p, x, tol);
  std::vector<int> rows;
  for (int i : out.active.indices)
    if (p.rows().row(i).norm() > 0.0) rows.push_back(i);
  if (rows.empty()) return out;
  Mat sub(static_cast<Eigen::Index>(rows.size()), p.n());
  for (std::size_t k = 0; k < rows.size(); ++k) sub.row(static_cast<Eigen::Index>(k)) = p.rows().row(rows[k]);
  Eigen::ColPivHouseholderQR<Mat> qr(sub.transpose());
  out.licq = qr.rank() == static_cast<Eigen::Index>(rows.size()) && rows.size() == out.active.indices.size();

  lp::Problem prob;
  const int first = prob.add_variables(static_cast<int>(rows.size()), 0.0, lp::kInf);
  for (std::size_t k = 0; k < rows.size(); ++k) prob.set_cost(first + static_cast<int>(k), -1.0);
  for (int j = 0; j < p.n(); ++j) {
    std::vector<lp::Problem::Entry> row;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double c = p.rows()(rows[k], j) / p.rows().row(rows[k]).norm();
      if (c != 0.0) row.push_back({first + static_cast<int>(k), c});
    }
    if (!row.empty()) prob.add_row(row, 0.0, 0.0);
  }
  std::vector<lp::Problem::Entry> total;
  for (std::size_t k = 0; k < rows.size(); ++k) total.push_back({first + static_cast<int>(k), 1.0});
  prob.add_row(total, -lp::kInf, 1.0);
  const lp::Result res = lp::solve(prob);
  if (res.status == lp::Status::Optimal && -res.objective > 1e-9) {
    out.holds = false;
    // Undo the row normalisation so that sum alpha_i a_i = 0 for the stored rows.
    Vec alpha = Vec::Zero(p.m());
    for (std::size_t k = 0; k < rows.size(); ++k)
      alpha(rows[k]) = res.x(first + static_cast<int>(k)) / p.rows().row(rows[k]).norm();
    alpha /= alpha.sum();
    out.certificate = alpha;
    out.licq = false;
  }
  return out;
}

SlaterReport slater_margin(const Polyhedron& p) {
  lp::Problem prob;
  prob.add_variables(p.n(), -lp::kInf, lp::kInf);
  const int s = prob.add_variable(-lp::kInf, lp::kInf, 1.0);
  for (int i = 0; i < p.m(); ++i) {
    std::vector<lp::Problem::Entry> row;
    for (int j = 0; j < p.n(); ++j)
      if (p.rows()(i, j) != 0.0) row.push_back({j, p.rows()(i, j)});
    row.push_back({s, -1.0});
    prob.add_row(row, -lp::kInf, p.offsets()(i));
  }
  const lp::Result res = lp::solve(prob);
  SlaterReport out;
  if (res.status == lp::Status::Unbounded) {
    out.unbounded = true;
    out.margin = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (res.status != lp::Status::Optimal) throw Error(ErrorKind::InvalidArgument, "Slater LP failed");
  out.margin = res.x(s);
  out.point = res.x.head(p.n());
  return out;
}

double inverse_triangle_constant(const Polyhedron& p, const std::vector<int>& indices) {
  std::vector<int> rows;
  for (int i : indices)
    if (p.rows().row(i).norm() > 0.0) rows.push_back(i);
  if (rows.empty()) return 1.0;
  lp::Problem prob;
  const int first = prob.add_variables(static_cast<int>(rows.size()), 0.0, lp::kInf);
  const int t = prob.add_variable(0.0, lp::kInf, 1.0);
  for (int j = 0; j < p.n(); ++j) {
    std::vector<lp::Problem::Entry> row;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double c = p.rows()(rows[k], j) / p.rows().row(rows[k]).norm();
      if (c != 0.0) row.push_back({first + static_cast<int>(k), c});
    }
    auto upper = row;
    upper.push_back({t, -1.0});
    prob.add_row(upper, -lp::kInf, 0.0);
    row.push_back({t, 1.0});
    prob.add_row(row, 0.0, lp::kInf);
  }
  std::vector<lp::Problem::Entry> total;
  for (std::size_t k = 0; k < rows.size(); ++k) total.push_back({first + static_cast<int>(k), 1.0});
  prob.add_row(total, 1.0, 1.0);
  const lp::Result res = lp::solve(prob);
  if (res.status != lp::Status::Optimal || res.objective <= 1e-12) return std::numeric_limits<double>::infinity();
  return 1.0 / res.objective;
}

}  // namespace polysweep
