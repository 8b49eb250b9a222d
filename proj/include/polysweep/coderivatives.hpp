#pragma once

#include <optional>
#include <vector>

#include "polysweep/polyhedra.hpp"

namespace polysweep {

enum class DescriptorStatus { Empty, Constrained };

// Finitely presented coderivative value: gamma_i = 0 on zero_indices,
// gamma_i >= 0 on nonneg_indices, gamma_i free on free_indices.
struct CoderivDescriptor {
  DescriptorStatus status = DescriptorStatus::Constrained;
  std::vector<int> zero_indices;
  std::vector<int> nonneg_indices;
  std::vector<int> free_indices;

  bool empty() const { return status == DescriptorStatus::Empty; }
  bool contains(const Vec& gamma, double tol = 1e-12) const;
  bool operator==(const CoderivDescriptor& other) const = default;
};

// D* N_{R^m_-}(x, v)(w).  Throws NotInGraph when (x, v) is off the graph.
CoderivDescriptor coderiv_orthant(const Vec& x, const Vec& v, const Vec& w, double tol = 1e-9);

struct MembershipResult {
  double residual = 0.0;  // Euclidean distance to the nearest admissible stacked vector
  bool empty = false;     // value of the coderivative is empty for every admissible p
  std::optional<Vec> p;
  std::optional<Vec> q;
  Vec nearest;            // the stacked vector attaining the residual
  int p_candidates = 0;
};

// Coderivative estimate for G(x, A, b) = N(x; C(A, b)) evaluated at (x, v) in direction w.
// Output layout: [A^T q (n) | p_i w + q_i x (m blocks of n) | -q (m)].
MembershipResult coderiv_G_membership(const Polyhedron& p, const Vec& x, const Vec& v, const Vec& w,
                                      const Vec& candidate, double tol = -1.0);

// Value and Jacobians of the perturbation g at the base point.
struct PerturbationJet {
  Vec value;  // g(x, u)
  Mat jx;     // n x n
  Mat ju;     // n x d
};

// Estimate for F(x, A, b, u) = N(x; C(A, b)) - g(x, u) at (x, A, b, u, w) in direction y.
// Output layout: [A^T q - jx^T y | p_i y + q_i x | -q | -ju^T y].
MembershipResult coderiv_F_membership(const Polyhedron& p, const PerturbationJet& g, const Vec& x, const Vec& w,
                                      const Vec& y, const Vec& candidate, double tol = -1.0);

// Stacked outputs for explicit (p, q), used to build candidates.
Vec stacked_G(const Polyhedron& p, const Vec& x, const Vec& w, const Vec& pm, const Vec& q);
Vec stacked_F(const Polyhedron& p, const PerturbationJet& g, const Vec& x, const Vec& y, const Vec& pm, const Vec& q);

// Vertices of {p >= 0, p_i = 0 off the active set, A^T p = v} (m <= 8), followed
// by the minimum-norm element.  Duplicates are removed.
std::vector<Vec> admissible_multipliers(const Polyhedron& p, const Vec& x, const Vec& v, double tol = -1.0);

}  // namespace polysweep
