#include "polysweep/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polysweep/errors.hpp"

namespace polysweep {

namespace {

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

Perturbation Perturbation::identity(int n) {
  Perturbation p;
  p.gx_ = Mat::Zero(n, n);
  p.gu_ = Mat::Identity(n, n);
  p.c_ = Vec::Zero(n);
  p.identity_ = true;
  return p;
}

Perturbation Perturbation::affine(Mat gx, Mat gu, Vec c) {
  if (gx.rows() != gx.cols() || gu.rows() != gx.rows() || c.size() != gx.rows())
    throw Error(ErrorKind::DimensionMismatch, "affine perturbation blocks have inconsistent shapes");
  Perturbation p;
  p.gx_ = std::move(gx);
  p.gu_ = std::move(gu);
  p.c_ = std::move(c);
  p.identity_ = p.gx_.isZero(0.0) && p.c_.isZero(0.0) && p.gu_.rows() == p.gu_.cols() &&
                p.gu_.isIdentity(0.0);
  return p;
}

double Perturbation::lipschitz() const { return std::max(op_norm(gx_), op_norm(gu_)); }

ControlSet ControlSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw Error(ErrorKind::DimensionMismatch, "box bounds differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower(i) <= upper(i))) throw Error(ErrorKind::InvalidArgument, "box lower bound exceeds upper bound");
  ControlSet s;
  s.kind_ = Kind::Box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ControlSet ControlSet::ball(Vec center, double radius) {
  if (center.size() == 0 || !(radius >= 0.0)) throw Error(ErrorKind::InvalidArgument, "ball needs a center and radius >= 0");
  ControlSet s;
  s.kind_ = Kind::Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

ControlSet ControlSet::finite(std::vector<Vec> points) {
  if (points.empty()) throw Error(ErrorKind::InvalidArgument, "finite control set is empty");
  for (const Vec& p : points)
    if (p.size() != points.front().size()) throw Error(ErrorKind::DimensionMismatch, "finite control points differ in length");
  ControlSet s;
  s.kind_ = Kind::Finite;
  s.points_ = std::move(points);
  return s;
}

int ControlSet::d() const {
  switch (kind_) {
    case Kind::Box: return static_cast<int>(lower_.size());
    case Kind::Ball: return static_cast<int>(center_.size());
    case Kind::Finite: return static_cast<int>(points_.front().size());
  }
  return 0;
}

double ControlSet::violation(const Vec& u) const {
  if (u.size() != d()) throw Error(ErrorKind::DimensionMismatch, "control dimension differs from control set");
  switch (kind_) {
    case Kind::Box: {
      double v = 0.0;
      for (Eigen::Index i = 0; i < u.size(); ++i) v = std::max({v, lower_(i) - u(i), u(i) - upper_(i)});
      return v;
    }
    case Kind::Ball: return std::max(0.0, (u - center_).norm() - radius_);
    case Kind::Finite: return (project(u) - u).norm();
  }
  return 0.0;
}

Vec ControlSet::project(const Vec& u) const {
  switch (kind_) {
    case Kind::Box: return u.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::Ball: {
      const Vec d = u - center_;
      const double r = d.norm();
      return r <= radius_ ? u : Vec(center_ + d * (radius_ / r));
    }
    case Kind::Finite: {
      const Vec* best = &points_.front();
      double bd = (u - *best).norm();
      for (const Vec& p : points_) {
        const double dd = (u - p).norm();
        if (dd < bd) {
          bd = dd;
          best = &p;
        }
      }
      return *best;
    }
  }
  return u;
}

double ControlSet::max_norm() const {
  switch (kind_) {
    case Kind::Box: return lower_.cwiseAbs().cwiseMax(upper_.cwiseAbs()).norm();
    case Kind::Ball: return center_.norm() + radius_;
    case Kind::Finite: {
      double r = 0.0;
      for (const Vec& p : points_) r = std::max(r, p.norm());
      return r;
    }
  }
  return 0.0;
}

double ControlSet::support(const Vec& psi) const {
  switch (kind_) {
    case Kind::Box: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < psi.size(); ++i) s += std::max(psi(i) * lower_(i), psi(i) * upper_(i));
      return s;
    }
    case Kind::Ball: return psi.dot(center_) + radius_ * psi.norm();
    case Kind::Finite: {
      double s = -std::numeric_limits<double>::infinity();
      for (const Vec& p : points_) s = std::max(s, psi.dot(p));
      return s;
    }
  }
  return 0.0;
}

TerminalCost TerminalCost::linear(Vec c, double c0) {
  TerminalCost t;
  t.q = Mat::Zero(c.size(), c.size());
  t.c = std::move(c);
  t.c0 = c0;
  return t;
}

double TerminalCost::eval(const Vec& x) const { return 0.5 * x.dot(q * x) + c.dot(x) + c0; }

Vec TerminalCost::grad(const Vec& x) const { return q * x + c; }

const char* RunningCost::block_name(int b) {
  static const char* names[] = {"x", "a", "b", "u", "xdot", "adot", "bdot"};
  return names[b];
}

double RunningCost::eval_block(int b, const Vec& z) const {
  const Quadratic& blk = blocks[b];
  double s = 0.0;
  if (blk.weight.size() > 0) {
    if (blk.weight.size() != z.size()) throw Error(ErrorKind::DimensionMismatch, std::string("running cost block ") + block_name(b));
    s += 0.5 * (blk.weight.array() * z.array().square()).sum();
  }
  if (blk.linear.size() > 0) {
    if (blk.linear.size() != z.size()) throw Error(ErrorKind::DimensionMismatch, std::string("running cost block ") + block_name(b));
    s += blk.linear.dot(z);
  }
  return s;
}

Vec RunningCost::grad_block(int b, const Vec& z) const {
  const Quadratic& blk = blocks[b];
  Vec g = Vec::Zero(z.size());
  if (blk.weight.size() > 0) g += blk.weight.cwiseProduct(z);
  if (blk.linear.size() > 0) g += blk.linear;
  return g;
}

double RunningCost::eval(const Vec& x, const Vec& a, const Vec& b, const Vec& u, const Vec& xd, const Vec& ad,
                         const Vec& bd) const {
  const Vec* z[Count] = {&x, &a, &b, &u, &xd, &ad, &bd};
  double s = 0.0;
  for (int k = 0; k < Count; ++k)
    if (uses(k)) s += eval_block(k, *z[k]);
  return s;
}

const char* to_string(MovingSet::Kind kind) {
  switch (kind) {
    case MovingSet::Kind::Fixed: return "fixed";
    case MovingSet::Kind::Sampled: return "sampled";
    case MovingSet::Kind::Decision: return "decision";
  }
  return "unknown";
}

namespace {

// Index k and weight w with t between times[k] and times[k+1].
std::pair<std::size_t, double> bracket(const std::vector<double>& times, double t) {
  if (times.size() == 1 || t <= times.front()) return {0, 0.0};
  if (t >= times.back()) return {times.size() - 2, 1.0};
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  return {k, (t - times[k]) / (times[k + 1] - times[k])};
}

}  // namespace

Mat MovingSet::a_at(double t) const {
  if (kind != Kind::Sampled || times.empty()) return a0;
  const auto [k, w] = bracket(times, t);
  if (times.size() == 1) return a_samples.front();
  return (1.0 - w) * a_samples[k] + w * a_samples[k + 1];
}

Vec MovingSet::b_at(double t) const {
  if (kind != Kind::Sampled || times.empty()) return b0;
  const auto [k, w] = bracket(times, t);
  if (times.size() == 1) return b_samples.front();
  return (1.0 - w) * b_samples[k] + w * b_samples[k + 1];
}

Polyhedron SweepingProblem::set_at(double t) const {
  std::optional<Polyhedron::Band> band;
  return Polyhedron(moving.a_at(t), moving.b_at(t), band);
}

void SweepingProblem::validate() const {
  if (n < 1 || m < 1 || d < 1) throw Error(ErrorKind::InvalidArgument, "dimensions n, m, d must be positive");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "final time must be positive");
  if (x0.size() != n) throw Error(ErrorKind::DimensionMismatch, "x0 has wrong length");
  if (g.n() != n || g.d() != d) throw Error(ErrorKind::DimensionMismatch, "perturbation shape differs from (n, d)");
  if (controls.d() != d) throw Error(ErrorKind::DimensionMismatch, "control set dimension differs from d");
  if (phi.c.size() != n || phi.q.rows() != n || phi.q.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "terminal cost has wrong shape");
  const int sizes[RunningCost::Count] = {n, m * n, m, d, n, m * n, m};
  for (int k = 0; k < RunningCost::Count; ++k) {
    const auto& blk = ell.blocks[k];
    if ((blk.weight.size() > 0 && blk.weight.size() != sizes[k]) || (blk.linear.size() > 0 && blk.linear.size() != sizes[k]))
      throw Error(ErrorKind::DimensionMismatch, std::string("running cost block ") + RunningCost::block_name(k));
  }
  if (moving.a0.rows() != m || moving.a0.cols() != n || moving.b0.size() != m)
    throw Error(ErrorKind::DimensionMismatch, "moving set has wrong shape");
  if (moving.kind == MovingSet::Kind::Sampled) {
    if (moving.times.empty() || moving.times.size() != moving.a_samples.size() || moving.times.size() != moving.b_samples.size())
      throw Error(ErrorKind::DimensionMismatch, "sampled moving set needs equally many times and samples");
    for (std::size_t k = 1; k < moving.times.size(); ++k)
      if (!(moving.times[k] > moving.times[k - 1])) throw Error(ErrorKind::InvalidArgument, "sample times must increase");
  }
  if (moving.kind == MovingSet::Kind::Decision && moving.band_delta) {
    for (int i = 0; i < m; ++i) {
      const double r = moving.a0.row(i).norm();
      if (std::abs(r - 1.0) > *moving.band_delta + 1e-12)
        throw Error(ErrorKind::InvalidArgument, "initial row norm outside the band");
    }
  }
  const Polyhedron c0 = set_at(0.0);
  active_set(c0, x0);  // throws InfeasiblePoint
}

}  // namespace polysweep
