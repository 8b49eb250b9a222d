#include "polysweep/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "polysweep/qp.hpp"

namespace polysweep {

namespace {

Vec solve_passive(const Mat& m, const Vec& v, const std::vector<bool>& passive) {
  std::vector<int> idx;
  for (std::size_t j = 0; j < passive.size(); ++j)
    if (passive[j]) idx.push_back(static_cast<int>(j));
  Vec z = Vec::Zero(m.cols());
  if (idx.empty()) return z;
  Mat sub(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
  const Vec zs = sub.colPivHouseholderQr().solve(v);
  for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zs(static_cast<Eigen::Index>(k));
  return z;
}

}  // namespace

NnlsResult nnls(const Mat& m, const Vec& v, int max_iterations) {
  const Eigen::Index n = m.cols();
  NnlsResult out;
  out.x = Vec::Zero(n);
  if (n == 0) {
    out.residual = v.norm();
    return out;
  }
  if (max_iterations <= 0) max_iterations = static_cast<int>(3 * n + 30);
  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = 10.0 * eps * std::max<double>(1.0, m.cwiseAbs().maxCoeff()) *
                     static_cast<double>(std::max(m.rows(), n)) * (1.0 + v.norm());
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vec x = Vec::Zero(n);
  Vec w = m.transpose() * (v - m * x);
  int iter = 0;
  while (iter < max_iterations) {
    int t = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best) {
        best = w(j);
        t = static_cast<int>(j);
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = true;
    Vec z = solve_passive(m, v, passive);
    while (iter < max_iterations) {
      ++iter;
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          const double a = denom > 0.0 ? x(j) / denom : 0.0;
          alpha = std::min(alpha, a);
        }
      }
      if (!std::isfinite(alpha)) break;
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
      z = solve_passive(m, v, passive);
    }
    x = z;
    w = m.transpose() * (v - m * x);
  }
  out.converged = iter < max_iterations;
  out.iterations = iter;
  out.x = x.cwiseMax(0.0);
  out.residual = (m * out.x - v).norm();
  return out;
}

NnlsResult nnls_min_norm(const Mat& m, const Vec& v) {
  NnlsResult fit = nnls(m, v);
  if (m.cols() == 0) return fit;
  Eigen::ColPivHouseholderQR<Mat> qr(m);
  if (qr.rank() == m.cols()) return fit;  // fit is unique
  // The fitted vector M x is unique; pick the least-norm x reproducing it.
  ProjectionQp qp;
  qp.e_mat = m;
  qp.e_rhs = m * fit.x;
  qp.g_mat = -Mat::Identity(m.cols(), m.cols());
  qp.g_rhs = Vec::Zero(m.cols());
  try {
    const ProjectionResult pr = project_onto(qp, Vec::Zero(m.cols()));
    NnlsResult out = fit;
    out.x = pr.z.cwiseMax(0.0);
    out.residual = (m * out.x - v).norm();
    if (out.residual <= fit.residual + 1e-12 * (1.0 + v.norm())) return out;
  } catch (const std::exception&) {
  }
  return fit;
}

}  // namespace polysweep
