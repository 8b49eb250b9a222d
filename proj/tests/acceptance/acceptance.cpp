// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "polysweep/certify.hpp"
#include "polysweep/coderivatives.hpp"
#include "polysweep/example8.hpp"
#include "polysweep/nnls.hpp"
#include "polysweep/solve.hpp"

using namespace polysweep;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Accumulates named comparisons; the first failures are kept for the report.
class Checks {
 public:
  void le(const std::string& what, double value, double tol) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s=%.3g", what.c_str(), value);
    note(value <= tol, buf);
  }
  void is(const std::string& what, bool ok) { note(ok, what); }
  Outcome outcome() const { return {failures_.empty(), failures_.empty() ? summary_ : "failed: " + failures_}; }
  void summary(const std::string& s) { summary_ = s; }

 private:
  void note(bool ok, const std::string& text) {
    if (!ok && failures_.size() < 200) failures_ += (failures_.empty() ? "" : "; ") + text;
  }
  std::string failures_;
  std::string summary_;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

DiscreteQuadruple rollout(const DiscreteProblem& dp, const Vec& second) {
  return simulate(dp.base, example8::controls(dp.nu(), second), dp.mesh).q;
}

double second_half_gap(const DiscreteQuadruple& q, const Vec& target) {
  double gap = 0.0;
  for (int j = 0; j < q.nu(); ++j)
    if (q.mesh.t[static_cast<std::size_t>(j)] >= 0.5) gap = std::max(gap, (q.u[static_cast<std::size_t>(j)] - target).lpNorm<Eigen::Infinity>());
  return gap;
}

// Leading-coordinate multiplier of the example: eta times |a_11| = eta / sqrt(5).
double eta_leading(double eta) { return eta / std::sqrt(5.0); }

Outcome optimum_reproduction() {
  Checks c;
  const DiscreteProblem dp = example8::discrete(2);
  const ReducedSolution red = solve_reduced_halfspace(dp);
  c.le("reduced |u-(-0.4,0.1)|", (red.u - v2(-0.4, 0.1)).lpNorm<Eigen::Infinity>(), 1e-6);
  c.le("reduced |eta1-0.04|", std::abs(red.eta_leading - 0.04), 1e-8);
  c.le("reduced |J-2.205|", std::abs(red.cost - 2.205), 1e-9);
  SolveOptions so;
  so.starts = 16;
  so.seed = 0;
  const SolveResult r = solve_Pk(dp, rollout(dp, example8::constrained_control()), so);
  c.le("solve |u-(-0.4,0.1)|", second_half_gap(r.q, v2(-0.4, 0.1)), 1e-6);
  c.le("solve |eta1-0.04|", std::abs(eta_leading(r.q.eta[1](0)) - 0.04), 1e-8);
  c.le("solve |J-2.205|", std::abs(r.cost.total - 2.205), 1e-9);
  c.le("solve violation", r.residuals.max_violation, 1e-8);
  c.summary(fmt("u=(%.9f, %.9f) J=%.12f", r.q.u[1](0), r.q.u[1](1), r.cost.total));
  return c.outcome();
}

Outcome constrained_branch() {
  Checks c;
  const DiscreteProblem dp = example8::discrete(2);
  SolveOptions so;
  so.branch = EtaBranch::Resting;
  const SolveResult r = solve_Pk(dp, rollout(dp, v2(0.0, 0.0)), so);
  c.le("|u-(-1/3,1/6)|", second_half_gap(r.q, v2(-1.0 / 3.0, 1.0 / 6.0)), 1e-6);
  c.le("|J-53/24|", std::abs(r.cost.total - 53.0 / 24.0), 1e-9);
  c.le("|eta1|", r.q.eta[1].norm(), 1e-12);
  c.summary(fmt("u=(%.9f, %.9f) J=%.12f", r.q.u[1](0), r.q.u[1](1), r.cost.total));
  return c.outcome();
}

Outcome trajectory_fidelity() {
  Checks c;
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, v2(-0.4, 0.1));
  c.is("x(1/2) == (1, 1/2)", q.x[1](0) == 1.0 && q.x[1](1) == 0.5);
  c.le("|x(1)-(41/50,59/100)|", (q.x[2] - v2(41.0 / 50.0, 59.0 / 100.0)).norm(), 1e-10);
  // Closed-form arc on [1/2, 1]: (1 - 9/25 (t - 1/2), 1/2 + 9/50 (t - 1/2)).
  c.le("arc at t=1", (q.x[2] - v2(1.0 - 9.0 / 25.0 * 0.5, 0.5 + 9.0 / 50.0 * 0.5)).norm(), 1e-10);
  // phi(x(1)) + h l(u_0) + h l(u_1) with l(u) = (u1^2 + 2 u2^2) / 2.
  const double hand = q.x[2](0) + q.x[2](1) + 0.5 * (1.0 + 2.0) / 2.0 + 0.5 * (0.16 + 2.0 * 0.01) / 2.0;
  c.le("|hand J-2.205|", std::abs(hand - 2.205), 1e-9);
  c.le("|J_k-2.205|", std::abs(cost_Jk(dp, q).total - 2.205), 1e-9);
  c.summary(fmt("x(1)=(%.15g, %.15g)", q.x[2](0), q.x[2](1)));
  return c.outcome();
}

Outcome certificate_existence() {
  Checks c;
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, v2(-0.4, 0.1));
  const CertificateSearch s = find_certificate(dp, q);
  const DualCertificate& d = s.certificate;
  c.le("residual", s.residual, 1e-8);
  c.is("lambda > 0", d.lambda > 0.0);
  c.le("|p21 + 2 p22|", std::abs(d.px[2](0) + 2.0 * d.px[2](1)), 1e-8);
  const Vec& u = q.u[1];
  c.le("|u-re|", std::abs(2.0 * d.psi[1](0) + 4.0 * d.psi[1](1) + d.lambda * (u(0) + 4.0 * u(1))), 1e-8);
  const CertificateReport rep = check_certificate(dp, q, d);
  c.le("max family residual", rep.max_residual, 1e-8);
  c.summary(fmt("residual=%.3g lambda=%.6g p2=(%.6g,...)", s.residual, d.lambda, d.px[2](0)));
  return c.outcome();
}

Outcome certificate_rejection() {
  Checks c;
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = rollout(dp, v2(0.0, 0.0));
  CertifyOptions co;
  co.exhaustive = true;
  const CertificateSearch s = find_certificate(dp, q, co);
  double least = std::numeric_limits<double>::infinity();
  for (double r : s.pattern_residuals) least = std::min(least, r);
  c.is("every pattern tried", s.patterns_tried == 3 && !s.budget_exceeded);
  c.is("min residual > 1e-3", least > 1e-3);
  // Regression anchor recorded on the first verified run.
  c.le("|residual - 1/6|", std::abs(least - 1.0 / 6.0), 1e-9);
  c.summary(fmt("min residual over %.0f patterns = %.12g", s.patterns_tried, least));
  return c.outcome();
}

Vec v1(double a) { return Vec::Constant(1, a); }

CoderivDescriptor expected_descriptor(const std::vector<oracle::Coderiv1d>& parts) {
  CoderivDescriptor d;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const int k = static_cast<int>(i);
    switch (parts[i]) {
      case oracle::Coderiv1d::Empty:
      case oracle::Coderiv1d::Other: d.status = DescriptorStatus::Empty; break;
      case oracle::Coderiv1d::Zero: d.zero_indices.push_back(k); break;
      case oracle::Coderiv1d::Nonneg: d.nonneg_indices.push_back(k); break;
      case oracle::Coderiv1d::Free: d.free_indices.push_back(k); break;
    }
  }
  return d;
}

bool same(const CoderivDescriptor& got, const CoderivDescriptor& want) {
  if (want.empty() || got.empty()) return want.empty() == got.empty();
  return got == want;
}

Outcome orthant_strata() {
  Checks c;
  const oracle::OrthantGraphOracle graph(10000);
  struct Case {
    const char* name;
    double x, v, w;
  };
  // x < 0; v > 0 with w = 0 and w != 0; the origin with w > 0 and w < 0.
  const Case cases[] = {{"x<0", -0.5, 0.0, 0.7}, {"v>0,w=0", 0.0, 0.5, 0.0}, {"v>0,w!=0", 0.0, 0.5, 1.0},
                        {"origin,w>0", 0.0, 0.0, 1.0}, {"origin,w<0", 0.0, 0.0, -1.0}};
  for (const Case& k : cases) {
    const CoderivDescriptor want = expected_descriptor({graph.classify(k.x, k.v, k.w)});
    c.is(std::string("m=1 ") + k.name, same(coderiv_orthant(v1(k.x), v1(k.v), v1(k.w)), want));
  }
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> kind(0, 2), sign(-1, 1);
  std::uniform_real_distribution<double> mag(0.1, 0.9);
  int empties = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(3), v(3), w(3);
    std::vector<oracle::Coderiv1d> parts;
    for (int i = 0; i < 3; ++i) {
      const int s = kind(rng);
      x(i) = s == 0 ? -mag(rng) : 0.0;
      v(i) = s == 1 ? mag(rng) : 0.0;
      w(i) = sign(rng) * mag(rng);
      parts.push_back(graph.classify(x(i), v(i), w(i)));
    }
    const CoderivDescriptor want = expected_descriptor(parts);
    empties += want.empty();
    c.is("m=3 trial " + std::to_string(trial), same(coderiv_orthant(x, v, w), want));
  }
  c.summary(fmt("5 scalar strata and 100 random m=3 cases (%.0f empty) on %.0f graph samples", empties, graph.sample_count()));
  return c.outcome();
}

// Exhaustive NNLS: least squares on every support, keeping nonnegative fits.
double nnls_enumerate(const Mat& m, const Vec& v) {
  const int k = static_cast<int>(m.cols());
  double best = v.norm();
  for (unsigned mask = 1; mask < (1u << k); ++mask) {
    std::vector<int> cols;
    for (int i = 0; i < k; ++i)
      if (mask & (1u << i)) cols.push_back(i);
    Mat s(m.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) s.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
    const Vec z = s.completeOrthogonalDecomposition().solve(v);
    if (z.minCoeff() < -1e-12) continue;
    best = std::min(best, (s * z - v).norm());
  }
  return best;
}

Outcome projection_oracle() {
  Checks c;
  std::mt19937_64 rng(20240917);
  std::uniform_int_distribution<int> dim(1, 4);
  std::normal_distribution<double> normal(0.0, 2.0);
  int memberships = 0;
  double worst_proj = 0.0, worst_nnls = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = dim(rng), m = dim(rng);
    const oracle::RandomPolyhedron rp = oracle::random_polyhedron(rng, n, m);
    const Polyhedron p(rp.a, rp.b);
    Vec y(n);
    for (int j = 0; j < n; ++j) y(j) = rp.anchor(j) + normal(rng);
    const Projection pr = project(p, y);
    const Vec ref = oracle::project_enumerate(rp.a, rp.b, y);
    worst_proj = std::max(worst_proj, (pr.x - ref).norm());
    c.le("projection gap trial " + std::to_string(trial), (pr.x - ref).norm(), 1e-8);
    // y - proj(y) is a normal by construction, so membership holds.
    const Vec normal_v = y - pr.x;
    const Vec eta = normal_cone_multipliers(p, pr.x, normal_v, 1e-8);
    ++memberships;
    c.le("reconstruction trial " + std::to_string(trial), (rp.a.transpose() * eta - normal_v).norm(), 1e-8);
    c.is("eta >= 0 trial " + std::to_string(trial), eta.size() == 0 || eta.minCoeff() >= 0.0);
    const NnlsResult nr = nnls(rp.a.transpose(), y);
    const double gap = std::abs(nr.residual - nnls_enumerate(rp.a.transpose(), y));
    worst_nnls = std::max(worst_nnls, gap);
    c.le("nnls residual trial " + std::to_string(trial), gap, 1e-8);
  }
  c.summary(fmt("1000 polyhedra, worst projection gap %.2g, worst NNLS gap %.2g, %.0f reconstructions", worst_proj, worst_nnls,
                memberships));
  return c.outcome();
}

Outcome discretization_convergence() {
  Checks c;
  const fixtures::Synthetic syn;
  const Reference ref = syn.reference(1 << 12);
  const SweepingProblem p = syn.problem(ref);
  double prev = -1.0, worst_factor = std::numeric_limits<double>::infinity();
  for (int nu = 8; nu <= 256; nu *= 2) {
    const Discretization d = discretize_feasible(p, ref, Mesh::uniform(1.0, nu));
    c.is("active sets nu=" + std::to_string(nu), d.diag.active_sets_match);
    c.le("inclusion residual nu=" + std::to_string(nu), d.diag.max_inclusion_residual, 1e-12);
    if (prev > 0) {
      const double factor = prev / d.diag.gap.state;
      worst_factor = std::min(worst_factor, factor);
      c.is("gap factor nu=" + std::to_string(nu) + " " + std::to_string(factor), factor >= 1.5);
    }
    prev = d.diag.gap.state;
  }
  c.summary(fmt("worst gap reduction per doubling %.4f, final gap %.3g", worst_factor, prev));
  return c.outcome();
}

Outcome mesh_independence() {
  Checks c;
  SolveOptions so;
  const DiscreteProblem dp2 = example8::discrete(2);
  const Reference ref = Reference::from_quadruple(rollout(dp2, v2(-0.4, 0.1)));
  const std::vector<StudyRow> rows =
      convergence_study([](int nu) { return example8::discrete(nu); },
                        [](const DiscreteProblem& dp) { return example8::controls(dp.nu(), example8::constrained_control()); }, ref,
                        {2, 4, 8, 16}, so);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const StudyRow& r : rows) {
    lo = std::min(lo, r.cost);
    hi = std::max(hi, r.cost);
    c.le("|J-2.205| nu=" + std::to_string(r.nu), std::abs(r.cost - 2.205), 1e-6);
  }
  c.le("spread of J", hi - lo, 1e-6);
  c.summary(fmt("J in [%.12f, %.12f] over nu = 2, 4, 8, 16", lo, hi));
  return c.outcome();
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"optimum reproduction", 5.0, optimum_reproduction},
      {"constrained branch", 1.0, constrained_branch},
      {"trajectory fidelity", 0.0, trajectory_fidelity},
      {"certificate existence", 5.0, certificate_existence},
      {"certificate rejection", 0.0, certificate_rejection},
      {"orthant coderivative strata", 10.0, orthant_strata},
      {"projection and NNLS oracles", 30.0, projection_oracle},
      {"discretization convergence", 30.0, discretization_convergence},
      {"mesh independence", 0.0, mesh_independence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& k = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = k.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (k.budget_s > 0 && secs > k.budget_s) {
      o.pass = false;
      o.detail += fmt(" (over the %.0f s budget)", k.budget_s);
    }
    failed += !o.pass;
    std::printf("%s [%zu] %s: %s (%.3f s)\n", o.pass ? "PASS" : "FAIL", i + 1, k.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
