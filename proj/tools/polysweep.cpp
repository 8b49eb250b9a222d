// Command-line front end: the planar showcase, simulation, (P_k) solves,
// certificates, convergence studies and coderivative queries.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "polysweep/certify.hpp"
#include "polysweep/coderivatives.hpp"
#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"
#include "polysweep/io.hpp"
#include "polysweep/solve.hpp"

using namespace polysweep;
using Json = nlohmann::ordered_json;

namespace {

struct Globals {
  double tol = 1e-9;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

std::string out_path(const Globals& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return (std::filesystem::path(g.out_dir) / name).string();
}

void write_json(const std::string& path, const Json& j) { io::write_file(path, io::canonical(j.dump())); }

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string fmt(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + io::format_number(v(i));
  return s + ")";
}

// Accepts either a discrete problem or a bare problem; a bare problem gets a
// uniform mesh with nu cells.  A positive nu also remeshes a discrete problem.
DiscreteProblem load_problem_file(const std::string& path, int nu, int fallback_nu) {
  const std::string text = io::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  DiscreteProblem dp;
  if (j.is_object() && j.contains("problem")) {
    dp = io::load_discrete(text);
    if (nu > 0) dp.mesh = Mesh::uniform(dp.base.horizon, nu);
  } else {
    dp.base = io::load_problem(text);
    dp.mesh = Mesh::uniform(dp.base.horizon, nu > 0 ? nu : fallback_nu);
  }
  dp.validate();
  return dp;
}

// Piecewise-constant resampling of a control sequence onto the mesh of dp.
ControlSequence resample(const ControlSequence& c, const DiscreteProblem& dp) {
  const int k = static_cast<int>(c.u.size());
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "control sequence is empty");
  ControlSequence out;
  const double horizon = dp.base.horizon;
  for (int j = 0; j < dp.nu(); ++j) {
    const double mid = 0.5 * (dp.mesh.t[static_cast<std::size_t>(j)] + dp.mesh.t[static_cast<std::size_t>(j) + 1]);
    const int cell = std::min(k - 1, static_cast<int>(std::floor(mid / horizon * k)));
    out.u.push_back(c.u[static_cast<std::size_t>(cell)]);
  }
  if (dp.base.moving.kind == MovingSet::Kind::Decision) {
    const int kn = static_cast<int>(c.a.size());
    for (int j = 0; j <= dp.nu(); ++j) {
      const double t = dp.mesh.t[static_cast<std::size_t>(j)];
      if (kn > 1 && static_cast<int>(c.b.size()) == kn) {
        const int node = std::min(kn - 1, static_cast<int>(std::lround(t / horizon * (kn - 1))));
        out.a.push_back(c.a[static_cast<std::size_t>(node)]);
        out.b.push_back(c.b[static_cast<std::size_t>(node)]);
      } else {
        out.a.push_back(dp.base.moving.a_at(t));
        out.b.push_back(dp.base.moving.b_at(t));
      }
    }
  }
  return out;
}

// Default initial controls: the reference when there is one, otherwise the
// projection of the pinned first control (or zero) onto U.
ControlSequence default_init(const DiscreteProblem& dp) {
  ControlSequence c;
  for (int j = 0; j < dp.nu(); ++j) {
    const double t = dp.mesh.t[static_cast<std::size_t>(j)];
    Vec u = dp.reference ? dp.reference->u_at(t) : (dp.pinned_u0() ? *dp.pinned_u0() : Vec::Zero(dp.base.d));
    c.u.push_back(dp.control_set(j).project(u));
  }
  return resample(c, dp);
}

DiscreteQuadruple rollout(const DiscreteProblem& dp, const ControlSequence& c) {
  SimulateOptions so;
  so.mode = dp.mode;
  so.tol = dp.tol;
  return simulate(dp.base, c, dp.mesh, so).q;
}

struct Check {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

Json checks_json(const std::vector<Check>& checks) {
  Json a = Json::array();
  for (const Check& c : checks) a.push_back({{"name", c.name}, {"value", c.value}, {"tol", c.tol}, {"pass", c.pass}});
  return a;
}

int report_checks(const std::vector<Check>& checks) {
  bool ok = true;
  for (const Check& c : checks) {
    std::printf("%s %-28s %.3e (tol %.0e)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tol);
    ok = ok && c.pass;
  }
  if (!ok)
    for (const Check& c : checks)
      if (!c.pass) std::fprintf(stderr, "failing check: %s\n", c.name.c_str());
  return ok ? 0 : 1;
}

void add_check(std::vector<Check>& checks, const std::string& name, double value, double tol) {
  checks.push_back({name, value, tol, value <= tol});
}

// Largest deviation of the second-half controls of q from target.
double second_half_gap(const DiscreteQuadruple& q, const Vec& target) {
  double gap = 0.0;
  for (int j = 0; j < q.nu(); ++j)
    if (q.mesh.t[static_cast<std::size_t>(j)] >= 0.5) gap = std::max(gap, (q.u[static_cast<std::size_t>(j)] - target).lpNorm<Eigen::Infinity>());
  return gap;
}

double leading_scale(const Mat& a) {
  for (Eigen::Index k = 0; k < a.cols(); ++k)
    if (a(0, k) != 0.0) return std::abs(a(0, k));
  return 1.0;
}

int cmd_example8(const Globals& g, const std::string& which, int nu, int starts) {
  if (nu < 2 || nu % 2 != 0) throw CLI::ValidationError("--nu", "must be an even number >= 2");
  const DiscreteProblem dp = example8::discrete(nu);
  const ReducedSolution red = solve_reduced_halfspace(example8::discrete(2));
  const DiscreteQuadruple init = rollout(dp, example8::controls(nu, example8::constrained_control()));
  SolveOptions so;
  so.starts = starts;
  so.seed = g.seed;
  const double lead = leading_scale(dp.base.moving.a0);
  std::vector<Check> checks;
  Json summary;
  summary["nu"] = nu;
  summary["case"] = which;

  std::string costs = "source,label,u1,u2,eta_row,eta_leading,cost,feasible\n";
  auto cost_row = [&](const std::string& source, const std::string& label, const Vec& u, double er, double el, double c, bool f) {
    costs += source + "," + label + "," + io::format_number(u(0)) + "," + io::format_number(u(1)) + "," + io::format_number(er) + "," +
             io::format_number(el) + "," + io::format_number(c) + "," + (f ? "true" : "false") + "\n";
  };
  for (const ReducedCandidate& c : red.candidates) cost_row("reduced", c.label, c.u, c.eta_row, c.eta_leading, c.cost, c.feasible);

  const DiscreteQuadruple* shown = nullptr;
  SolveResult r2, r1;
  if (which != "1") {
    r2 = solve_Pk(dp, init, so);
    const int hit = nu / 2;
    const double eta_lead = r2.q.eta[static_cast<std::size_t>(hit)](0) * lead;
    cost_row("solve_Pk", "case2", r2.q.u[static_cast<std::size_t>(hit)], r2.q.eta[static_cast<std::size_t>(hit)](0), eta_lead,
             r2.cost.total, r2.residuals.feasible(so.feas_tol));
    add_check(checks, "reduced_case2_control", (red.u - example8::optimal_control()).lpNorm<Eigen::Infinity>(), 1e-6);
    add_check(checks, "reduced_case2_eta", std::abs(red.eta_leading - 0.04), 1e-8);
    add_check(checks, "reduced_case2_cost", std::abs(red.cost - 2.205), 1e-9);
    add_check(checks, "solve_case2_control", second_half_gap(r2.q, example8::optimal_control()), 1e-6);
    add_check(checks, "solve_case2_eta", std::abs(eta_lead - 0.04), 1e-8);
    add_check(checks, "solve_case2_cost", std::abs(r2.cost.total - 2.205), 1e-9);
    add_check(checks, "solve_case2_feasible", r2.residuals.max_violation, so.feas_tol);
    const DiscreteQuadruple sim = rollout(dp, example8::controls(nu, example8::optimal_control()));
    add_check(checks, "trajectory_hit", (sim.x[static_cast<std::size_t>(hit)] - Vec::Map(std::array<double, 2>{1.0, 0.5}.data(), 2)).norm(), 0.0);
    add_check(checks, "trajectory_end", (sim.x.back() - Vec::Map(std::array<double, 2>{0.82, 0.59}.data(), 2)).norm(), 1e-10);
    // The solver output is certified; the closed-form optimum is reported alongside.
    CertifyOptions co;
    co.tol = g.tol;
    const CertificateSearch cs = find_certificate(dp, r2.q, co);
    const CertificateReport rep = check_certificate(dp, r2.q, cs.certificate, co);
    const double closed_form_residual = find_certificate(dp, rollout(dp, example8::controls(nu, red.u)), co).residual;
    io::write_file(out_path(g, "example8_certificate.json"), io::certificate_report_json(cs, rep));
    add_check(checks, "certificate_residual", cs.residual, 1e-8);
    add_check(checks, "certificate_normal", cs.certificate.lambda > 0.0 ? 0.0 : 1.0, 0.0);
    const Vec& pn = cs.certificate.px.back();
    add_check(checks, "certificate_px_relation", std::abs(pn(0) + 2.0 * pn(1)), 1e-8);
    shown = &r2.q;
    summary["case2"] = {{"u", vec_json(r2.q.u[static_cast<std::size_t>(hit)])}, {"cost", r2.cost.total}, {"eta_leading", eta_lead},
                        {"evaluations", r2.evaluations}, {"certificate_residual", cs.residual}, {"closed_form_certificate_residual", closed_form_residual},
                        {"lambda", cs.certificate.lambda}};
  }
  if (which != "2") {
    SolveOptions s1 = so;
    s1.branch = EtaBranch::Resting;
    r1 = solve_Pk(dp, init, s1);
    const int hit = nu / 2;
    cost_row("solve_Pk", "case1", r1.q.u[static_cast<std::size_t>(hit)], r1.q.eta[static_cast<std::size_t>(hit)](0),
             r1.q.eta[static_cast<std::size_t>(hit)](0) * lead, r1.cost.total, r1.residuals.feasible(so.feas_tol));
    const ReducedSolution red1 = solve_reduced_halfspace(example8::discrete(2), EtaBranch::Resting);
    add_check(checks, "reduced_case1_control", (red1.u - example8::constrained_control()).lpNorm<Eigen::Infinity>(), 1e-6);
    add_check(checks, "reduced_case1_cost", std::abs(red1.cost - 53.0 / 24.0), 1e-9);
    add_check(checks, "solve_case1_control", second_half_gap(r1.q, example8::constrained_control()), 1e-6);
    add_check(checks, "solve_case1_cost", std::abs(r1.cost.total - 53.0 / 24.0), 1e-9);
    double eta_max = 0.0;
    for (const Vec& e : r1.q.eta) eta_max = std::max(eta_max, e.lpNorm<Eigen::Infinity>());
    add_check(checks, "solve_case1_eta_zero", eta_max, 1e-12);
    if (!shown) {
      CertifyOptions co;
      co.tol = g.tol;
      const CertificateSearch cs = find_certificate(dp, r1.q, co);
      io::write_file(out_path(g, "example8_certificate.json"),
                     io::certificate_report_json(cs, check_certificate(dp, r1.q, cs.certificate, co)));
      shown = &r1.q;
    }
    summary["case1"] = {{"u", vec_json(r1.q.u[static_cast<std::size_t>(hit)])}, {"cost", r1.cost.total}, {"evaluations", r1.evaluations}};
  }
  io::write_file(out_path(g, "example8_trajectory.csv"), io::trajectory_csv(*shown));
  io::write_file(out_path(g, "example8_costs.csv"), costs);
  bool all = true;
  for (const Check& c : checks) all = all && c.pass;
  summary["checks"] = checks_json(checks);
  summary["all_pass"] = all;
  write_json(out_path(g, "example8_summary.json"), summary);
  std::printf("%s", costs.c_str());
  return report_checks(checks);
}

int cmd_simulate(const Globals& g, const std::string& problem, const std::string& controls, int nu, const std::string& mode,
                 bool lenient, const std::string& out) {
  ControlSequence c = io::load_controls(io::read_file(controls));
  const DiscreteProblem dp = load_problem_file(problem, nu, static_cast<int>(c.u.size()));
  if (static_cast<int>(c.u.size()) != dp.nu() || (dp.base.moving.kind == MovingSet::Kind::Decision && c.a.empty())) c = resample(c, dp);
  SimulateOptions so;
  so.mode = mode == "projective" ? StepMode::Projective : StepMode::Explicit;
  so.lenient = lenient;
  so.tol = g.tol;
  const Simulation sim = simulate(dp.base, c, dp.mesh, so);
  const std::string path = out.empty() ? out_path(g, "trajectory.csv") : out;
  io::write_file(path, io::trajectory_csv(sim.q));
  std::printf("x(T) = %s\n", fmt(sim.q.x.back()).c_str());
  if (lenient) std::printf("violation = %s\n", io::format_number(sim.violation).c_str());
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_solve(const Globals& g, const std::string& problem, int nu, const std::string& init_path, int starts, const std::string& branch,
              long max_evaluations, const std::string& out) {
  const DiscreteProblem dp = load_problem_file(problem, nu, 2);
  const ControlSequence c = init_path.empty() ? default_init(dp) : resample(io::load_controls(io::read_file(init_path)), dp);
  SolveOptions so;
  so.starts = starts;
  so.seed = g.seed;
  so.max_evaluations = max_evaluations;
  so.branch = branch == "resting" ? EtaBranch::Resting : EtaBranch::Any;
  const SolveResult r = solve_Pk(dp, rollout(dp, c), so);
  io::write_file(out_path(g, "solution.json"), io::dump_quadruple(r.q));
  io::write_file(out_path(g, "trajectory.csv"), io::trajectory_csv(r.q));
  ControlSequence sol;
  sol.u = r.q.u;
  if (dp.base.moving.kind == MovingSet::Kind::Decision) {
    sol.a = r.q.a;
    sol.b = r.q.b;
  }
  io::write_file(out_path(g, "controls.json"), io::dump_controls(sol));
  if (!out.empty()) io::write_file(out, out.ends_with(".csv") ? io::trajectory_csv(r.q) : io::dump_quadruple(r.q));
  Json s;
  s["nu"] = dp.nu();
  s["cost"] = {{"terminal", r.cost.terminal}, {"running", r.cost.running}, {"proximity", r.cost.proximity}, {"total", r.cost.total}};
  s["max_violation"] = r.residuals.max_violation;
  s["evaluations"] = r.evaluations;
  s["best_start"] = r.best_start;
  s["budget_exceeded"] = r.budget_exceeded;
  write_json(out_path(g, "solve_summary.json"), s);
  std::printf("J = %s  max_violation = %.3e  evaluations = %ld%s\n", io::format_number(r.cost.total).c_str(), r.residuals.max_violation,
              r.evaluations, r.budget_exceeded ? "  (budget exceeded)" : "");
  return 0;
}

int cmd_certify(const Globals& g, const std::string& problem, const std::string& solution, const std::string& mode, bool exhaustive,
                bool abnormal, double accept, const std::string& out) {
  const DiscreteProblem probe = load_problem_file(problem, 0, 2);
  const std::string text = io::read_file(solution);
  DiscreteProblem dp = probe;
  DiscreteQuadruple q;
  const Json head = text.starts_with("{") ? Json::parse(text, nullptr, false) : Json();
  if (head.is_object() && !head.contains("mesh")) {
    // A bare control sequence is rolled out on the problem mesh.
    q = rollout(dp, resample(io::load_controls(text), dp));
  } else {
    q = io::load_solution(text, probe.base, Mesh{});
    dp.mesh = q.mesh;
    dp.validate();
  }
  CertifyOptions co;
  co.mode = mode == "th71" ? CertifyMode::Th71 : CertifyMode::Th72;
  co.tol = g.tol;
  co.exhaustive = exhaustive;
  co.allow_abnormal = abnormal;
  const CertificateSearch cs = find_certificate(dp, q, co);
  const CertificateReport rep = check_certificate(dp, q, cs.certificate, co);
  const std::string path = out.empty() ? out_path(g, "certificate.json") : out;
  io::write_file(path, io::certificate_report_json(cs, rep));
  std::printf("mode %s  residual %.3e  patterns %ld  lambda %s\n", to_string(co.mode), cs.residual, cs.patterns_tried,
              io::format_number(cs.certificate.lambda).c_str());
  for (const FamilyResidual& f : rep.families) std::printf("  %-16s %.3e\n", f.family.c_str(), f.residual);
  std::printf("%s\n", cs.residual <= accept ? "passes the necessary conditions" : "rejected: no case pattern satisfies the conditions");
  return 0;
}

int cmd_study(const Globals& g, const std::string& problem, const std::vector<int>& nu_list, const std::string& init_path, int starts,
              const std::string& out) {
  if (nu_list.empty()) throw CLI::ValidationError("--nu-list", "needs at least one mesh size");
  SolveOptions so;
  so.starts = starts;
  so.seed = g.seed;
  std::vector<StudyRow> rows;
  if (problem.empty()) {
    const DiscreteProblem dp2 = example8::discrete(2);
    const Reference ref = Reference::from_quadruple(rollout(dp2, example8::controls(2, example8::optimal_control())));
    rows = convergence_study([](int nu) { return example8::discrete(nu); },
                             [](const DiscreteProblem& dp) { return example8::controls(dp.nu(), example8::constrained_control()); }, ref,
                             nu_list, so);
  } else {
    const DiscreteProblem base = load_problem_file(problem, 0, nu_list.back());
    const std::optional<ControlSequence> init =
        init_path.empty() ? std::nullopt : std::optional<ControlSequence>(io::load_controls(io::read_file(init_path)));
    auto make = [&](int nu) {
      DiscreteProblem dp = base;
      dp.mesh = Mesh::uniform(dp.base.horizon, nu);
      return dp;
    };
    auto init_controls = [&](const DiscreteProblem& dp) { return init ? resample(*init, dp) : default_init(dp); };
    // Without a reference the gaps are measured against the initial rollout on the finest mesh.
    const Reference ref = base.reference ? *base.reference
                                         : Reference::from_quadruple(rollout(make(nu_list.back()), init_controls(make(nu_list.back()))));
    rows = convergence_study(make, init_controls, ref, nu_list, so);
  }
  const std::string csv = study_csv(rows);
  io::write_file(out.empty() ? out_path(g, "study.csv") : out, csv);
  std::printf("%s", csv.c_str());
  for (const StudyRow& r : rows)
    if (!r.ok) return 1;
  return 0;
}

int cmd_coderiv(const Globals& g, const std::vector<double>& x, const std::vector<double>& v, const std::vector<double>& w,
                const std::string& polyhedron, const std::vector<double>& candidate) {
  auto to_vec = [](const std::vector<double>& s) { return Vec(Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()))); };
  Json out;
  if (polyhedron.empty()) {
    const CoderivDescriptor d = coderiv_orthant(to_vec(x), to_vec(v), to_vec(w), g.tol);
    out["kind"] = "orthant";
    out["status"] = d.empty() ? "empty" : "constrained";
    out["zero"] = d.zero_indices;
    out["nonneg"] = d.nonneg_indices;
    out["free"] = d.free_indices;
  } else {
    const Polyhedron p = io::load_polyhedron(io::read_file(polyhedron));
    const MembershipResult r = coderiv_G_membership(p, to_vec(x), to_vec(v), to_vec(w), to_vec(candidate), g.tol);
    out["kind"] = "normal_cone_mapping";
    out["residual"] = r.residual;
    out["empty"] = r.empty;
    out["member"] = !r.empty && r.residual <= g.tol;
    if (r.p) out["p"] = vec_json(*r.p);
    if (r.q) out["q"] = vec_json(*r.q);
    out["p_candidates"] = r.p_candidates;
  }
  const std::string text = io::canonical(out.dump());
  io::write_file(out_path(g, "coderiv.json"), text);
  std::printf("%s", text.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"polysweep: optimal control of sweeping processes with controlled polyhedral sets"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--tol", g.tol, "activity and residual tolerance")->capture_default_str();
  app.add_option("--seed", g.seed, "seed of the multistart sequence")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "directory for artifacts")->capture_default_str();

  std::string which = "both";
  int ex_nu = 2, starts = 16;
  auto* ex = app.add_subcommand("example8", "planar showcase: reduced program, (P_k) solves, trajectory and certificate");
  ex->add_option("--case", which, "1 (eta = 0 branch), 2 (riding branch) or both")->check(CLI::IsMember({"1", "2", "both"}))->capture_default_str();
  ex->add_option("--nu", ex_nu, "even number of mesh cells")->capture_default_str();
  ex->add_option("--starts", starts, "multistart points")->capture_default_str();

  std::string problem, controls, mode = "explicit", out, init, branch = "any", solution, cmode = "th72";
  int nu = 0;
  long max_eval = 20000;
  bool lenient = false, exhaustive = false, abnormal = false;
  double accept = 1e-8;
  auto* sim = app.add_subcommand("simulate", "roll out controls through the catching-up scheme");
  sim->add_option("--problem", problem, "problem or discrete problem JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--controls", controls, "control sequence JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--nu", nu, "uniform mesh cells (default: number of controls)");
  sim->add_option("--mode", mode, "explicit or projective")->check(CLI::IsMember({"explicit", "projective"}))->capture_default_str();
  sim->add_flag("--lenient", lenient, "report infeasibility instead of failing");
  sim->add_option("--out", out, "trajectory CSV path");

  auto* sol = app.add_subcommand("solve", "solve the discrete problem by multistart pattern search");
  sol->add_option("--problem", problem, "problem or discrete problem JSON")->required()->check(CLI::ExistingFile);
  sol->add_option("--nu", nu, "uniform mesh cells");
  sol->add_option("--init", init, "initial control sequence JSON")->check(CLI::ExistingFile);
  sol->add_option("--starts", starts, "multistart points")->capture_default_str();
  sol->add_option("--branch", branch, "any or resting (eta = 0 at every step)")->check(CLI::IsMember({"any", "resting"}))->capture_default_str();
  sol->add_option("--max-evaluations", max_eval, "budget per start and phase")->capture_default_str();
  sol->add_option("--out", out, "solution path: trajectory CSV if it ends in .csv, quadruple JSON otherwise");

  auto* cert = app.add_subcommand("certify", "search a dual certificate for a candidate solution");
  cert->add_option("--problem", problem, "problem or discrete problem JSON")->required()->check(CLI::ExistingFile);
  cert->add_option("--solution", solution, "solution JSON or trajectory CSV")->required()->check(CLI::ExistingFile);
  cert->add_option("--mode", cmode, "th71 (raw conditions) or th72 (initial data)")->check(CLI::IsMember({"th71", "th72"}))->capture_default_str();
  cert->add_flag("--exhaustive", exhaustive, "try every case pattern");
  cert->add_flag("--abnormal", abnormal, "also search lambda = 0 when no normal certificate exists");
  cert->add_option("--accept", accept, "residual below which the candidate passes")->capture_default_str();
  cert->add_option("--out", out, "report JSON path");

  std::vector<int> nu_list{2, 4, 8, 16};
  auto* st = app.add_subcommand("study", "mesh refinement study (default: the planar example)");
  st->add_option("--problem", problem, "discrete problem JSON")->check(CLI::ExistingFile);
  st->add_option("--nu-list", nu_list, "comma separated mesh sizes")->delimiter(',')->check(CLI::PositiveNumber);
  st->add_option("--init", init, "initial control sequence JSON")->check(CLI::ExistingFile);
  st->add_option("--starts", starts, "multistart points")->capture_default_str();
  st->add_option("--out", out, "study CSV path");

  std::vector<double> cx, cv, cw, cand;
  std::string poly;
  auto* cd = app.add_subcommand("coderiv", "coderivative of the orthant normal cone, or membership for a polyhedral normal cone mapping");
  cd->add_option("--x", cx, "base point")->delimiter(',')->required();
  cd->add_option("--v", cv, "normal vector at x")->delimiter(',')->required();
  cd->add_option("--w", cw, "direction")->delimiter(',')->required();
  cd->add_option("--polyhedron", poly, "polyhedron JSON (membership mode)")->check(CLI::ExistingFile);
  cd->add_option("--candidate", cand, "stacked candidate (membership mode)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ex->parsed()) return cmd_example8(g, which, ex_nu, starts);
    if (sim->parsed()) return cmd_simulate(g, problem, controls, nu, mode, lenient, out);
    if (sol->parsed()) return cmd_solve(g, problem, nu, init, starts, branch, max_eval, out);
    if (cert->parsed()) return cmd_certify(g, problem, solution, cmode, exhaustive, abnormal, accept, out);
    if (st->parsed()) return cmd_study(g, problem, nu_list, init, starts, out);
    if (cd->parsed()) {
      if (!poly.empty() && cand.empty()) throw CLI::ValidationError("--candidate", "required with --polyhedron");
      return cmd_coderiv(g, cx, cv, cw, poly, cand);
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const Error& e) {
    Json err{{"error", to_string(e.kind())}, {"message", e.what()}};
    const std::string text = io::canonical(err.dump());
    std::printf("%s", text.c_str());
    try {
      io::write_file(out_path(g, "error.json"), text);
    } catch (const std::exception&) {
    }
    return e.kind() == ErrorKind::ParseError ? 2 : 1;
  } catch (const std::exception& e) {
    Json err{{"error", "Internal"}, {"message", e.what()}};
    std::printf("%s", io::canonical(err.dump()).c_str());
    return 1;
  }
  return 2;
}
