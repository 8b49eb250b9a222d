#include "polysweep/qp.hpp"

#include <algorithm>
#include <cmath>

#include "polysweep/errors.hpp"
#include "polysweep/lp.hpp"

namespace polysweep {

namespace {

Vec feasible_start(const ProjectionQp& qp, Eigen::Index n) {
  lp::Problem prob;
  prob.add_variables(static_cast<int>(n), -lp::kInf, lp::kInf);
  const int s = prob.add_variable(-1.0, lp::kInf, 1.0);
  for (Eigen::Index r = 0; r < qp.e_mat.rows(); ++r) {
    std::vector<lp::Problem::Entry> row;
    for (Eigen::Index j = 0; j < n; ++j)
      if (qp.e_mat(r, j) != 0.0) row.push_back({static_cast<int>(j), qp.e_mat(r, j)});
    prob.add_row(row, qp.e_rhs(r), qp.e_rhs(r));
  }
  for (Eigen::Index r = 0; r < qp.g_mat.rows(); ++r) {
    std::vector<lp::Problem::Entry> row;
    for (Eigen::Index j = 0; j < n; ++j)
      if (qp.g_mat(r, j) != 0.0) row.push_back({static_cast<int>(j), qp.g_mat(r, j)});
    row.push_back({s, -1.0});
    prob.add_row(row, -lp::kInf, qp.g_rhs(r));
  }
  const lp::Result res = lp::solve(prob);
  const double scale = 1.0 + (qp.g_rhs.size() ? qp.g_rhs.cwiseAbs().maxCoeff() : 0.0) +
                       (qp.e_rhs.size() ? qp.e_rhs.cwiseAbs().maxCoeff() : 0.0);
  if (res.status != lp::Status::Optimal) throw Error(ErrorKind::EmptyPolyhedron, "no point satisfies the constraints");
  if (qp.g_mat.rows() > 0 && res.x(s) > 1e-9 * scale)
    throw Error(ErrorKind::EmptyPolyhedron, "constraints are inconsistent");
  return res.x.head(n);
}

// Independent subset of the rows of e.
std::vector<int> independent_rows(const Mat& e) {
  std::vector<int> keep;
  if (e.rows() == 0) return keep;
  Eigen::ColPivHouseholderQR<Mat> qr(e.transpose());
  qr.setThreshold(1e-12);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < qr.rank(); ++k) keep.push_back(perm(k));
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

ProjectionResult project_onto(const ProjectionQp& qp, const Vec& y, double tol) {
  const Eigen::Index n = y.size();
  if ((qp.e_mat.rows() > 0 && qp.e_mat.cols() != n) || (qp.g_mat.rows() > 0 && qp.g_mat.cols() != n))
    throw Error(ErrorKind::DimensionMismatch, "constraint width differs from point dimension");
  const std::vector<int> eq_rows = independent_rows(qp.e_mat);
  const Eigen::Index neq = static_cast<Eigen::Index>(eq_rows.size());
  const Eigen::Index mg = qp.g_mat.rows();

  ProjectionResult out;
  Vec z = feasible_start(qp, n);
  std::vector<int> work;  // indices into G
  std::vector<bool> in_work(static_cast<std::size_t>(mg), false);

  auto working_matrix = [&]() {
    Mat a(neq + static_cast<Eigen::Index>(work.size()), n);
    for (Eigen::Index k = 0; k < neq; ++k) a.row(k) = qp.e_mat.row(eq_rows[static_cast<std::size_t>(k)]);
    for (std::size_t k = 0; k < work.size(); ++k) a.row(neq + static_cast<Eigen::Index>(k)) = qp.g_mat.row(work[k]);
    return a;
  };

  const int max_iter = static_cast<int>(10 * (mg + n) + 100);
  Vec lambda;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    const Vec d = y - z;
    const Mat a = working_matrix();
    Vec p = d;
    Eigen::HouseholderQR<Mat> qr;
    if (a.rows() > 0) {
      qr.compute(a.transpose());
      const Mat q1 = qr.householderQ() * Mat::Identity(n, a.rows());
      p = d - q1 * (q1.transpose() * d);
    }
    if (p.norm() <= tol * (1.0 + d.norm() + z.norm())) {
      lambda = a.rows() > 0 ? Vec(qr.solve(d)) : Vec();
      int drop = -1;
      const double mtol = 1e-12 * (1.0 + d.norm());
      for (std::size_t k = 0; k < work.size(); ++k) {
        if (lambda(neq + static_cast<Eigen::Index>(k)) < -mtol) {
          if (drop < 0 || work[k] < work[static_cast<std::size_t>(drop)]) drop = static_cast<int>(k);
        }
      }
      if (drop < 0) break;
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = false;
      work.erase(work.begin() + drop);
      continue;
    }
    double alpha = 1.0;
    int block = -1;
    for (Eigen::Index i = 0; i < mg; ++i) {
      if (in_work[static_cast<std::size_t>(i)]) continue;
      const double gp = qp.g_mat.row(i).dot(p);
      if (gp <= 1e-14 * (1.0 + p.norm())) continue;
      const double r = std::max(0.0, qp.g_rhs(i) - qp.g_mat.row(i).dot(z)) / gp;
      if (r < alpha) {
        alpha = r;
        block = static_cast<int>(i);
      }
    }
    z += alpha * p;
    if (block >= 0) {
      work.push_back(block);
      in_work[static_cast<std::size_t>(block)] = true;
    }
  }
  if (iter >= max_iter) throw Error(ErrorKind::EmptyPolyhedron, "projection active-set iteration limit reached");

  out.z = z;
  out.iterations = iter;
  out.ineq_multipliers = Vec::Zero(mg);
  out.eq_multipliers = Vec::Zero(neq);
  if (lambda.size() > 0) {
    out.eq_multipliers = lambda.head(neq);
    for (std::size_t k = 0; k < work.size(); ++k)
      out.ineq_multipliers(work[k]) = std::max(0.0, lambda(neq + static_cast<Eigen::Index>(k)));
  }
  out.working_set = work;
  std::sort(out.working_set.begin(), out.working_set.end());
  return out;
}

}  // namespace polysweep
