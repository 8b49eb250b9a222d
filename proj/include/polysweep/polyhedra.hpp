#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "polysweep/types.hpp"

namespace polysweep {

// C = {x : <a_i, x> <= b_i, i = 1..m}, rows a_i stored as the rows of `rows`.
class Polyhedron {
 public:
  using Band = std::pair<double, double>;

  Polyhedron() = default;
  Polyhedron(Mat rows, Vec offsets, std::optional<Band> norm_band = std::nullopt);

  const Mat& rows() const { return rows_; }
  const Vec& offsets() const { return offsets_; }
  const std::optional<Band>& norm_band() const { return norm_band_; }
  int m() const { return static_cast<int>(rows_.rows()); }
  int n() const { return static_cast<int>(rows_.cols()); }

  // A x - b.
  Vec slack(const Vec& x) const;
  // Rows whose norm leaves the band (empty when no band is attached).
  std::vector<int> band_violations(double tol = 1e-12) const;

 private:
  Mat rows_;
  Vec offsets_;
  std::optional<Band> norm_band_;
};

struct ActiveSet {
  std::vector<int> indices;
  double tolerance = 0.0;

  bool contains(int i) const;
  bool empty() const { return indices.empty(); }
};

// Negative tol selects the default 1e-9 * (1 + |x| + |b|).
double resolve_tolerance(const Polyhedron& p, const Vec& x, double tol);

ActiveSet active_set(const Polyhedron& p, const Vec& x, double tol = -1.0);

struct Projection {
  Vec x;
  Vec multipliers;  // y - x = sum mu_i a_i, mu >= 0, complementary
};

Projection project(const Polyhedron& p, const Vec& y);

// Minimum-norm eta >= 0 supported on the active set with sum eta_i a_i = v.
Vec normal_cone_multipliers(const Polyhedron& p, const Vec& x, const Vec& v, double tol = -1.0);

struct PlicqReport {
  bool holds = true;
  std::optional<Vec> certificate;  // alpha >= 0, sum alpha_i a_i = 0, sum alpha = 1
  bool licq = true;
  ActiveSet active;
};

PlicqReport check_plicq(const Polyhedron& p, const Vec& x, double tol = -1.0);

struct SlaterReport {
  double margin = 0.0;  // min_x max_i (<a_i,x> - b_i)
  bool unbounded = false;
  Vec point;
  bool holds() const { return unbounded || margin < 0.0; }
};

SlaterReport slater_margin(const Polyhedron& p);

// Witness gamma for sum lambda_i |a_i| <= gamma |sum lambda_i a_i| over lambda >= 0
// supported on `indices`.  Infinite when the rows are positively dependent.
double inverse_triangle_constant(const Polyhedron& p, const std::vector<int>& indices);

}  // namespace polysweep
