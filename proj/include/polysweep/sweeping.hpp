#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "polysweep/problem.hpp"

namespace polysweep {

struct Mesh {
  std::vector<double> t;  // 0 = t_0 < ... < t_nu = T

  static Mesh uniform(double horizon, int nu);
  int nu() const { return static_cast<int>(t.size()) - 1; }
  double h(int j) const { return t[static_cast<std::size_t>(j) + 1] - t[static_cast<std::size_t>(j)]; }
  double max_step() const;
  void validate() const;
  bool operator==(const Mesh& other) const = default;
};

// Mesh-indexed solution of the discrete inclusion.
struct DiscreteQuadruple {
  Mesh mesh;
  std::vector<Vec> x;    // nu + 1 states
  std::vector<Mat> a;    // nu + 1 row sets (m x n)
  std::vector<Vec> b;    // nu + 1 offsets
  std::vector<Vec> u;    // nu controls
  std::vector<Vec> eta;  // nu multipliers, eta_j refers to the rows a_j
  std::optional<int> hit_step;  // first node with a nonempty active set

  int nu() const { return mesh.nu(); }
  Polyhedron set(int j) const { return Polyhedron(a[static_cast<std::size_t>(j)], b[static_cast<std::size_t>(j)]); }
  Vec velocity(int j) const;
  Vec adot(int j) const;  // flattened row-major
  Vec bdot(int j) const;
};

// |(x_{j+1} - x_j)/h_j - g(x_j, u_j) + sum_i eta_ij a_ij|.
double inclusion_residual(const DiscreteQuadruple& q, const Perturbation& g, int j);
double max_inclusion_residual(const DiscreteQuadruple& q, const Perturbation& g);

enum class StepMode { Explicit, Projective };
const char* to_string(StepMode mode);

struct StepResult {
  Vec x_next;
  Vec eta;
  double violation = 0.0;  // lenient steps only: constraint violation at x_next
};

// One step of the discrete inclusion x_{j+1} in x_j - h F(x_j, a_j, b_j, u_j).
// Explicit: eta is the minimum-norm nonnegative fit of g on the rows active at
// x_j (the Moreau split of g into normal and tangent parts), then an Euler step.
// Projective: x_{j+1} is the projection of x_j + h g onto the next set and eta
// the projection multipliers divided by h.
StepResult catching_up_step(const Polyhedron& current, const Polyhedron& next, const Vec& x, const Vec& u, double h,
                            const Perturbation& g, StepMode mode, double tol = -1.0);

// Control inputs on a mesh: u has nu entries; a, b have nu + 1 entries and are
// read only when the moving set is a decision variable.
struct ControlSequence {
  std::vector<Vec> u;
  std::vector<Mat> a;
  std::vector<Vec> b;
};

struct SimulateOptions {
  StepMode mode = StepMode::Explicit;
  double tol = -1.0;
  // Lenient rollouts never throw on infeasibility; they report it instead.
  bool lenient = false;
  // Optional feedback map u_j -> map(j, x_j, C_j, u_j) applied before each step;
  // the mapped controls are the ones stored in the result.
  std::function<Vec(int, const Vec&, const Polyhedron&, const Vec&)> control_map;
};

struct Simulation {
  DiscreteQuadruple q;
  double violation = 0.0;  // sum of positive constraint slacks over all nodes (lenient)
};

Simulation simulate(const SweepingProblem& prob, const ControlSequence& controls, const Mesh& mesh,
                    const SimulateOptions& options = {});

// Sampled continuous data. Values are node samples; derivatives and u are
// right limits, taken constant on each cell [t_k, t_{k+1}).
struct Reference {
  std::vector<double> t;
  std::vector<Vec> x, xdot;
  std::vector<Mat> a, adot;
  std::vector<Vec> b, bdot;
  std::vector<Vec> u;

  int size() const { return static_cast<int>(t.size()); }
  int cell(double s) const;
  Vec x_at(double s) const;
  Mat a_at(double s) const;
  Vec b_at(double s) const;
  Vec xdot_at(double s) const { return xdot[static_cast<std::size_t>(cell(s))]; }
  Mat adot_at(double s) const { return adot[static_cast<std::size_t>(cell(s))]; }
  Vec bdot_at(double s) const { return bdot[static_cast<std::size_t>(cell(s))]; }
  Vec u_at(double s) const { return u[static_cast<std::size_t>(cell(s))]; }

  // Calls f(k, length) for every reference cell k overlapping [s0, s1].
  void for_each_overlap(double s0, double s1, const std::function<void(int, double)>& f) const;

  static Reference from_quadruple(const DiscreteQuadruple& q);

  struct Functions {
    std::function<Vec(double)> x, xdot, b, bdot, u;
    std::function<Mat(double)> a, adot;
  };
  static Reference sample(const std::vector<double>& grid, const Functions& f);
  void validate() const;
};

struct W12Gap {
  double state = 0.0;
  double ab = 0.0;
  double u = 0.0;
};

// Discrete W^{1,2} gaps of x and (a, b), and the L^2 gap of u.  With resampling
// the two grids are merged; otherwise differing grids raise MeshMismatch.
W12Gap w12_distance(const Reference& r1, const Reference& r2, bool resample = true);

struct DiscretizeOptions {
  double tol = -1.0;      // multiplier recovery tolerance, default scaled 1e-8
  int level = -1;         // refinement index k in the 2^-k terms, default log2(nu)
  double growth = -1.0;   // M in |g(x,u)| <= M (1 + |x|), default from the data
};

struct DiscretizeDiagnostics {
  double mu_k = 0.0;
  double delta_k = 0.0;
  W12Gap gap;
  double max_node_error = 0.0;  // max_j |x^k_j - xbar(t_j)|
  double theta_k = 0.0;         // a-priori bound on max_node_error
  double lipschitz = 0.0;
  double growth = 0.0;
  double variation = 0.0;       // max(var xdot, var u) of the reference
  double gamma = 1.0;           // inverse triangle witness along the mesh
  double mx1 = 0.0, mx2 = 0.0;
  double max_eta_ratio = 0.0;   // max eta_i / (gamma (|xdot| + |g|)), <= 1
  bool active_sets_match = true;
  double max_inclusion_residual = 0.0;
};

struct Discretization {
  DiscreteQuadruple q;
  DiscretizeDiagnostics diag;
  Reference as_reference() const { return Reference::from_quadruple(q); }
};

Discretization discretize_feasible(const SweepingProblem& prob, const Reference& ref, const Mesh& mesh,
                                   const DiscretizeOptions& options = {});

}  // namespace polysweep
