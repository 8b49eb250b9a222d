#pragma once

#include <optional>
#include <string>
#include <vector>

#include "polysweep/transcription.hpp"

namespace polysweep {

// Which statement the condition system follows: the raw necessary conditions
// with the graph normal cone replaced by its coderivative estimate (th71), or
// the conditions in terms of the initial data (th72).
enum class CertifyMode { Th71, Th72 };
const char* to_string(CertifyMode mode);

// Branch of the gamma sign rule for one (row i, step j).
enum class GammaCase {
  Inactive,  // <a, x> < b: gamma = 0
  Riding,    // eta > 0: <a, y> = 0, gamma free
  Zero,      // active, eta = 0, <a, y> <= 0: gamma = 0
  Nonneg,    // active, eta = 0, <a, y> >= 0: gamma >= 0
  Free,      // active, eta = 0, <a, y> = 0: gamma free
};
const char* to_string(GammaCase c);

// Subgradient selection (w^x, w^a, w^b, w^u, v^x, v^a, v^b) of l at step j.
struct Subgradients {
  Vec wx, wa, wb, wu, vx, va, vb;
};

struct DualCertificate {
  CertifyMode mode = CertifyMode::Th72;
  double lambda = 0.0;
  std::vector<Vec> eta;     // nu + 1: primal eta_j, then eta_nu (xi)
  std::vector<Vec> gamma;   // nu
  std::vector<Vec> px;      // nu + 1
  std::vector<Vec> pa, pb;  // nu + 1, empty vectors unless the moving set is a decision variable
  std::vector<Vec> psi;     // nu
  std::vector<Vec> alpha1, alpha2;  // nu + 1, empty unless decision
  std::vector<std::vector<GammaCase>> case_pattern;  // nu x m
  std::vector<Subgradients> subgradients;            // nu
  Vec phi_gradient;
  bool abnormal = false;

  // y_j = -(lambda / h_j) theta^X_j - lambda v^x_j + p^x_{j+1}.
  Vec y(const DiscreteProblem& dp, const DiscreteQuadruple& q, int j) const;
  double ntc_sum() const;   // normalised quantity of the mode's nontriviality condition
  double ntc1_sum() const;  // lambda + |alpha1 + alpha2|_1 + |gamma|_1
};

// Divides every dual variable by the mode's nontriviality sum.
DualCertificate normalize(const DualCertificate& cert);

struct CertifyOptions {
  CertifyMode mode = CertifyMode::Th72;
  double tol = 1e-9;                 // activity and positivity tolerance
  long max_patterns = 59049;         // 3^10
  bool allow_abnormal = false;       // also search lambda = 0 when the normal search fails
  bool exhaustive = false;           // keep enumerating after a pattern reaches residual <= tol / 1000
  std::optional<std::vector<Subgradients>> subgradients;  // default: gradients of l
  std::optional<Vec> phi_subgradient;                     // default: gradient of phi
};

// Dense affine description sum_k coeffs(r, k) z_k + constant(r) of every
// condition row, with sign/branch information carried by variable bounds.
struct ConditionRow {
  enum class Sense { Eq, Le, Ge };  // row = 0, row <= 0, row >= 0
  std::string family;
  std::string label;
  Sense sense = Sense::Eq;
};

struct ConditionSystem {
  CertifyMode mode = CertifyMode::Th72;
  std::vector<std::string> var_names;
  std::vector<std::string> var_family;  // family charged with a bound violation of the variable
  Vec lower, upper;  // variable bounds
  Mat coeffs;        // rows x variables
  Vec constant;
  std::vector<ConditionRow> rows;
  std::vector<std::vector<GammaCase>> pattern;
  // Primal data used by the assembly.
  std::vector<Vec> eta;
  std::vector<Subgradients> subgradients;
  Vec phi_gradient;
  ThetaTerms theta;
  double primal_residual = 0.0;  // max (87) residual of the primal eta

  int num_vars() const { return static_cast<int>(var_names.size()); }
  int index(const std::string& name) const;
  Vec evaluate(const Vec& z) const { return coeffs * z + constant; }
  Vec encode(const DualCertificate& cert) const;
  DualCertificate decode(const Vec& z) const;

  // Layout.
  bool decision = false;
  int nu = 0, n = 0, m = 0, d = 0;
  int lam = 0;
  std::vector<int> px, pa, pb, gamma, psi, a1, a2;
  int xi = 0;
  std::vector<int> ball_scale;  // per step, -1 unless U is a ball
  std::vector<Vec> ball_dir;    // outward unit normal at u_j, zero off the sphere
};

// Primal data of q: the forced gamma branches (Inactive/Riding) and the
// ambiguous cells (active with eta = 0), in (j, i) order.
struct PatternSpace {
  std::vector<std::vector<GammaCase>> forced;
  std::vector<std::pair<int, int>> ambiguous;
};
PatternSpace pattern_space(const DiscreteProblem& dp, const DiscreteQuadruple& q, const CertifyOptions& options = {});

// Throws PrimalInfeasible if no eta >= 0 supported on the active rows reproduces
// the step velocities of q.
ConditionSystem assemble_conditions(const DiscreteProblem& dp, const DiscreteQuadruple& q,
                                    const std::vector<std::vector<GammaCase>>& pattern,
                                    const CertifyOptions& options = {});

struct CertificateSearch {
  DualCertificate certificate;
  double residual = 0.0;        // smallest LP residual at lambda = 1 (lambda = 0 when abnormal)
  double normalized_residual = 0.0;  // max family residual of the normalised certificate
  long patterns_tried = 0;
  long ambiguous_cells = 0;
  bool budget_exceeded = false;
  std::vector<std::vector<std::vector<GammaCase>>> patterns;  // in the order tried
  std::vector<double> pattern_residuals;                       // +inf when the LP fails
};

CertificateSearch find_certificate(const DiscreteProblem& dp, const DiscreteQuadruple& q,
                                   const CertifyOptions& options = {});

struct FamilyResidual {
  std::string family;
  double residual = 0.0;
};

struct CertificateReport {
  std::vector<FamilyResidual> families;
  double max_residual = 0.0;
  double ntc_sum = 0.0;
  double ntc1_sum = 0.0;

  double family(const std::string& name) const;
};

// Per-family residuals of a certificate.  Throws DimensionMismatch.
CertificateReport check_certificate(const DiscreteProblem& dp, const DiscreteQuadruple& q,
                                    const DualCertificate& cert, const CertifyOptions& options = {});

}  // namespace polysweep
