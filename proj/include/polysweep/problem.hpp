#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polysweep/coderivatives.hpp"
#include "polysweep/polyhedra.hpp"

namespace polysweep {

// g(x, u) = gx x + gu u + c.  The identity perturbation g(x, u) = u is the
// special case gx = 0, gu = I, c = 0.
class Perturbation {
 public:
  static Perturbation identity(int n);
  static Perturbation affine(Mat gx, Mat gu, Vec c);

  int n() const { return static_cast<int>(gx_.rows()); }
  int d() const { return static_cast<int>(gu_.cols()); }
  bool is_identity() const { return identity_; }
  const Mat& gx() const { return gx_; }
  const Mat& gu() const { return gu_; }
  const Vec& c() const { return c_; }

  Vec eval(const Vec& x, const Vec& u) const { return gx_ * x + gu_ * u + c_; }
  PerturbationJet jet(const Vec& x, const Vec& u) const { return {eval(x, u), gx_, gu_}; }
  // Lipschitz constant of g in (x, u) w.r.t. the sum of norms.
  double lipschitz() const;

 private:
  Mat gx_, gu_;
  Vec c_;
  bool identity_ = false;
};

class ControlSet {
 public:
  enum class Kind { Box, Ball, Finite };

  static ControlSet box(Vec lower, Vec upper);
  static ControlSet ball(Vec center, double radius);
  static ControlSet finite(std::vector<Vec> points);

  Kind kind() const { return kind_; }
  int d() const;
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const std::vector<Vec>& points() const { return points_; }

  // Distance-like violation; 0 inside.
  double violation(const Vec& u) const;
  bool contains(const Vec& u, double tol = 1e-12) const { return violation(u) <= tol; }
  Vec project(const Vec& u) const;
  double max_norm() const;
  // Support function max_{v in U} <psi, v>.
  double support(const Vec& psi) const;

 private:
  Kind kind_ = Kind::Box;
  Vec lower_, upper_, center_;
  double radius_ = 0.0;
  std::vector<Vec> points_;
};

// phi(x) = 1/2 x^T Q x + c^T x + c0.
struct TerminalCost {
  Mat q;
  Vec c;
  double c0 = 0.0;

  static TerminalCost linear(Vec c, double c0 = 0.0);
  double eval(const Vec& x) const;
  Vec grad(const Vec& x) const;
};

// Separable quadratic running cost in the blocks (x, a, b, u, xdot, adot, bdot):
// sum over blocks of 1/2 z^T diag(w) z + l^T z.  Time-independent.
struct RunningCost {
  enum Block { X = 0, A, B, U, XDot, ADot, BDot, Count };

  struct Quadratic {
    Vec weight;  // empty = block absent
    Vec linear;
  };
  Quadratic blocks[Count];

  static const char* block_name(int b);

  double eval_block(int b, const Vec& z) const;
  Vec grad_block(int b, const Vec& z) const;
  bool uses(int b) const { return blocks[b].weight.size() > 0 || blocks[b].linear.size() > 0; }

  double eval(const Vec& x, const Vec& a, const Vec& b, const Vec& u, const Vec& xd, const Vec& ad, const Vec& bd) const;
};

// Specification of the moving set C(t) = {<a_i(t), x> <= b_i(t)}.
struct MovingSet {
  enum class Kind { Fixed, Sampled, Decision };

  Kind kind = Kind::Fixed;
  Mat a0;  // m x n, value at t = 0 (and for all t when Fixed)
  Vec b0;
  // Sampled: values at increasing times, linearly interpolated.
  std::vector<double> times;
  std::vector<Mat> a_samples;
  std::vector<Vec> b_samples;
  // Decision: half-width of the row norm band 1 +- delta (nullopt = no band).
  std::optional<double> band_delta;

  Mat a_at(double t) const;
  Vec b_at(double t) const;
};

const char* to_string(MovingSet::Kind kind);

struct SweepingProblem {
  int n = 0, m = 0, d = 0;
  double horizon = 1.0;
  Vec x0;
  Perturbation g = Perturbation::identity(1);
  ControlSet controls = ControlSet::box(Vec::Constant(1, -1.0), Vec::Constant(1, 1.0));
  TerminalCost phi;
  RunningCost ell;
  MovingSet moving;
  std::string name;

  Polyhedron set_at(double t) const;
  // Throws InvalidArgument / DimensionMismatch / InfeasiblePoint.
  void validate() const;
};

}  // namespace polysweep
