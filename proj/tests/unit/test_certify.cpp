#include "doctest.h"

#include <cmath>

#include "polysweep/certify.hpp"
#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"

using namespace polysweep;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

DiscreteQuadruple rollout(const DiscreteProblem& dp, const Vec& second) {
  return simulate(dp.base, example8::controls(dp.nu(), second), dp.mesh).q;
}

// Free motion far from a single halfspace: g = u, U = [-2, 2]^2,
// phi(x) = <c, x>, l = |u|^2 / 2.  Every (P_k) step solves u_j = -c.
DiscreteProblem free_motion(int nu, const Vec& c) {
  SweepingProblem p;
  p.name = "free";
  p.n = 2;
  p.m = 1;
  p.d = 2;
  p.x0 = Vec::Zero(2);
  p.g = Perturbation::identity(2);
  p.controls = ControlSet::box(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
  p.phi = TerminalCost::linear(c);
  p.ell.blocks[RunningCost::U].weight = Vec::Ones(2);
  p.moving.a0 = Mat::Identity(1, 2);
  p.moving.b0 = Vec::Constant(1, 100.0);
  p.validate();
  DiscreteProblem dp;
  dp.base = p;
  dp.mesh = Mesh::uniform(1.0, nu);
  dp.u0 = Vec::Zero(2);
  return dp;
}

DiscreteQuadruple constant_rollout(const DiscreteProblem& dp, const std::vector<Vec>& u) {
  ControlSequence cs;
  cs.u = u;
  return simulate(dp.base, cs, dp.mesh).q;
}

// Stationarity of the reduced (P_k) cost in the free controls u_1 .. u_{nu-1}:
// dJ/du_j = h (c + u_j), projected onto the box.
double kkt_residual(const DiscreteProblem& dp, const DiscreteQuadruple& q) {
  double r = 0.0;
  for (int j = 1; j < dp.nu(); ++j) {
    const Vec& u = q.u[static_cast<std::size_t>(j)];
    const Vec grad = dp.mesh.h(j) * (dp.base.phi.c + u);
    const Vec step = dp.base.controls.project(u - grad) - u;
    r = std::max(r, step.lpNorm<Eigen::Infinity>());
  }
  return r;
}

}  // namespace

TEST_CASE("certify: optimum of the planar example admits a normal certificate") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  const CertificateSearch s = find_certificate(dp, q);
  CHECK(s.residual <= 1e-8);
  CHECK(s.normalized_residual <= 1e-8);
  CHECK_FALSE(s.budget_exceeded);
  const DualCertificate& c = s.certificate;
  CHECK(c.lambda > 0.0);
  CHECK(c.ntc1_sum() == doctest::Approx(1.0));
  CHECK(c.case_pattern[1][0] == GammaCase::Riding);
  const Vec& p2 = c.px[2];
  CHECK(std::abs(p2(0) + 2.0 * p2(1)) <= 1e-8);
  CHECK((p2 - c.lambda * v2(-0.4, 0.2)).norm() <= 1e-8);
  // Local maximum principle on the riding segment: p_2 = psi_1 / h + lambda (u_11, 2 u_12).
  const Vec& u1 = q.u[1];
  const Vec& psi1 = c.psi[1];
  CHECK(std::abs(2.0 * psi1(0) + 4.0 * psi1(1) + c.lambda * (u1(0) + 4.0 * u1(1))) <= 1e-8);
  CHECK((p2 - (2.0 * psi1 + c.lambda * v2(u1(0), 2.0 * u1(1)))).norm() <= 1e-8);

  const CertificateReport rep = check_certificate(dp, q, c);
  CHECK(rep.max_residual <= 1e-8);
  for (const FamilyResidual& f : rep.families) CHECK_MESSAGE(f.residual <= 1e-8, f.family);
  for (int j = 0; j < dp.nu(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    const Vec slack = q.a[k] * q.x[k] - q.b[k];
    CHECK(c.eta[k].cwiseProduct(slack).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("certify: the raw and the initial-data systems agree on the planar example") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  CertifyOptions o;
  o.mode = CertifyMode::Th71;
  const CertificateSearch s71 = find_certificate(dp, q, o);
  const CertificateSearch s72 = find_certificate(dp, q);
  CHECK(s71.residual <= 1e-8);
  CHECK(s71.certificate.lambda > 0.0);
  CHECK(s71.certificate.ntc_sum() == doctest::Approx(1.0));
  const CertificateReport rep = check_certificate(dp, q, s71.certificate);
  CHECK(rep.family("graph_normal") <= 1e-8);
  CHECK(rep.family("psi") <= 1e-8);
  const ConditionSystem a = assemble_conditions(dp, q, s72.certificate.case_pattern, o);
  const ConditionSystem b = assemble_conditions(dp, q, s72.certificate.case_pattern);
  CHECK(a.coeffs == b.coeffs);
  CHECK(a.rows.size() == b.rows.size());
  // Same multipliers up to the normalisation.
  const DualCertificate x = normalize(s72.certificate);
  DualCertificate y = s71.certificate;
  y.mode = CertifyMode::Th72;
  y = normalize(y);
  CHECK((x.px[2] - y.px[2]).norm() <= 1e-8);
}

TEST_CASE("certify: a suboptimal second segment is rejected") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, v2(0.0, 0.0));
  const CertificateSearch s = find_certificate(dp, q);
  CHECK(s.ambiguous_cells == 1);
  CHECK(s.patterns_tried == 3);
  CHECK(s.residual >= 1e-3);
  // Regression anchor.
  CHECK(s.residual == doctest::Approx(1.0 / 6.0).epsilon(1e-9));
  for (double r : s.pattern_residuals) CHECK(r >= 1e-3);
}

TEST_CASE("certify: free motion gives the trivial certificate") {
  const DiscreteProblem dp = free_motion(4, Vec::Zero(2));
  const DiscreteQuadruple q = constant_rollout(dp, std::vector<Vec>(4, Vec::Zero(2)));
  const CertificateSearch s = find_certificate(dp, q);
  CHECK(s.residual == 0.0);
  const DualCertificate& c = s.certificate;
  CHECK(c.lambda == doctest::Approx(1.0));
  for (const Vec& v : c.psi) CHECK(v.norm() == 0.0);
  for (const Vec& v : c.px) CHECK(v.norm() == 0.0);
  for (const Vec& v : c.gamma) CHECK(v.norm() == 0.0);
  for (const auto& row : c.case_pattern) CHECK(row[0] == GammaCase::Inactive);
}

TEST_CASE("certify: residual vanishes exactly when the classical KKT residual does") {
  const Vec cvec = v2(0.5, -0.25);
  const DiscreteProblem dp = free_motion(4, cvec);
  std::vector<Vec> opt(4, -cvec);
  opt[0] = Vec::Zero(2);
  const DiscreteQuadruple q = constant_rollout(dp, opt);
  CHECK(kkt_residual(dp, q) <= 1e-12);
  CHECK(find_certificate(dp, q).residual <= 1e-10);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<Vec> u = opt;
    u[static_cast<std::size_t>(1 + trial % 3)] += v2(0.1 * (trial + 1), -0.05);
    const DiscreteQuadruple qq = constant_rollout(dp, u);
    CHECK(kkt_residual(dp, qq) > 1e-3);
    CHECK(find_certificate(dp, qq).residual > 1e-3);
  }
}

TEST_CASE("certify: zeroed multipliers fail nontriviality") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  DualCertificate c = find_certificate(dp, q).certificate;
  c.lambda = 0.0;
  for (auto* group : {&c.gamma, &c.px, &c.psi}) for (Vec& v : *group) v.setZero();
  c.eta.back().setZero();
  const CertificateReport rep = check_certificate(dp, q, c);
  CHECK(rep.ntc1_sum == 0.0);
  CHECK(rep.family("nontriviality") == 1.0);
}

TEST_CASE("certify: an inward psi at an active box face shows the inner-product gap") {
  DiscreteProblem dp = example8::discrete(2);
  dp.windows.clear();
  dp.u0.reset();
  const DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  DualCertificate c = find_certificate(dp, q).certificate;
  CHECK(check_certificate(dp, q, c).max_residual <= 1e-8);
  c.psi[0] = v2(0.5, 0.0);  // u_0 = (-1, -1) sits on the lower face
  const CertificateReport rep = check_certificate(dp, q, c);
  CHECK(rep.family("gmp") == doctest::Approx(1.0));
  CHECK(rep.family("max_principle") >= 0.5);
}

TEST_CASE("certify: normalisation is scale invariant") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  const DualCertificate c = find_certificate(dp, q).certificate;
  for (double t : {0.01, 3.0, 1e4}) {
    DualCertificate s = c;
    s.lambda *= t;
    s.eta.back() *= t;
    for (auto* group : {&s.gamma, &s.px, &s.psi}) for (Vec& v : *group) v *= t;
    const DualCertificate n = normalize(s);
    CHECK(n.lambda == doctest::Approx(c.lambda));
    for (std::size_t j = 0; j < c.px.size(); ++j) CHECK((n.px[j] - c.px[j]).norm() <= 1e-12);
    for (std::size_t j = 0; j < c.gamma.size(); ++j) CHECK((n.gamma[j] - c.gamma[j]).norm() <= 1e-12);
    CHECK(check_certificate(dp, q, n).max_residual <= 1e-8);
  }
}

TEST_CASE("certify: errors") {
  const DiscreteProblem dp = example8::discrete(2);
  DiscreteQuadruple q = rollout(dp, example8::optimal_control());
  DualCertificate c = find_certificate(dp, q).certificate;
  c.px.pop_back();
  CHECK_THROWS_AS(check_certificate(dp, q, c), Error);
  try {
    check_certificate(dp, q, c);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
  // Moving x_2 off the boundary direction leaves no admissible eta.
  q.x[2] += v2(0.3, 0.0);
  try {
    find_certificate(dp, q);
    FAIL("expected PrimalInfeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PrimalInfeasible);
  }
}

TEST_CASE("certify: pattern budget is reported") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, v2(0.0, 0.0));
  CertifyOptions o;
  o.max_patterns = 2;
  const CertificateSearch s = find_certificate(dp, q, o);
  CHECK(s.budget_exceeded);
  CHECK(s.patterns_tried == 2);
}

TEST_CASE("certify: the eta = 0 candidate passes only on the leaving branch") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, example8::constrained_control());
  CertifyOptions o;
  o.exhaustive = true;
  const CertificateSearch s = find_certificate(dp, q, o);
  REQUIRE(s.patterns.size() == 3);
  CHECK(s.residual <= 1e-12);
  CHECK(s.certificate.case_pattern[1][0] == GammaCase::Zero);
  CHECK(s.patterns[0][1][0] == GammaCase::Zero);
  CHECK(s.pattern_residuals[0] <= 1e-12);
  // Regression anchors: the riding-compatible branches fail.
  CHECK(s.patterns[1][1][0] == GammaCase::Nonneg);
  CHECK(s.patterns[2][1][0] == GammaCase::Free);
  CHECK(s.pattern_residuals[1] == doctest::Approx(0.063661).epsilon(1e-5));
  CHECK(s.pattern_residuals[2] == doctest::Approx(0.063661).epsilon(1e-5));
  // With the default early exit only the first pattern is needed.
  CHECK(find_certificate(dp, q).patterns_tried == 1);
}
