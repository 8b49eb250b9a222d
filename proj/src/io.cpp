#include "polysweep/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "polysweep/errors.hpp"

namespace polysweep::io {

using Json = nlohmann::ordered_json;

std::string format_number(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  if (v == 0.0) v = 0.0;  // canonical zero drops the sign
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

bool is_scalar(const Json& j) { return !j.is_array() && !j.is_object(); }

void write(const Json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' '), inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  if (j.is_number_float()) {
    out += format_number(j.get<double>());
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::all_of(j.begin(), j.end(), is_scalar);
    out += flat ? "[" : "[\n";
    for (std::size_t k = 0; k < j.size(); ++k) {
      if (!flat) out += inner;
      write(j[k], indent + 1, out);
      if (k + 1 < j.size()) out += flat ? ", " : ",\n";
    }
    out += flat ? "]" : "\n" + pad + "]";
  } else if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t k = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++k) {
      out += inner + Json(it.key()).dump() + ": ";
      write(it.value(), indent + 1, out);
      if (k + 1 < j.size()) out += ",";
      out += "\n";
    }
    out += pad + "}";
  } else {
    out += j.dump();
  }
}

std::string dump(const Json& j) {
  std::string out;
  write(j, 0, out);
  out += "\n";
  return out;
}

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
}

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::ParseError, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

double num(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  bad("expected a number, got " + j.dump());
}

int integer(const Json& j) {
  if (!j.is_number_integer()) bad("expected an integer, got " + j.dump());
  return j.get<int>();
}

std::string str(const Json& j) {
  if (!j.is_string()) bad("expected a string, got " + j.dump());
  return j.get<std::string>();
}

Json num_json(double v) {
  if (std::isfinite(v)) return Json(v);
  return Json(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num_json(v(i)));
  return a;
}

Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vec_json(m.row(i).transpose()));
  return a;
}

Vec vec(const Json& j) {
  if (!j.is_array()) bad("expected an array, got " + j.dump());
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = num(j[k]);
  return v;
}

Mat mat(const Json& j) {
  if (!j.is_array()) bad("expected an array of rows, got " + j.dump());
  if (j.empty()) return Mat();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Mat m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = vec(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) bad("ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

std::vector<double> reals(const Json& j) {
  const Vec v = vec(j);
  return {v.data(), v.data() + v.size()};
}

Json vecs_json(const std::vector<Vec>& vs) {
  Json a = Json::array();
  for (const Vec& v : vs) a.push_back(vec_json(v));
  return a;
}

Json mats_json(const std::vector<Mat>& ms) {
  Json a = Json::array();
  for (const Mat& m : ms) a.push_back(mat_json(m));
  return a;
}

std::vector<Vec> vecs(const Json& j) {
  if (!j.is_array()) bad("expected an array of vectors");
  std::vector<Vec> out;
  for (const Json& e : j) out.push_back(vec(e));
  return out;
}

std::vector<Mat> mats(const Json& j) {
  if (!j.is_array()) bad("expected an array of matrices");
  std::vector<Mat> out;
  for (const Json& e : j) out.push_back(mat(e));
  return out;
}

Json reals_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num_json(x));
  return a;
}

Json control_set_json(const ControlSet& s) {
  Json o;
  switch (s.kind()) {
    case ControlSet::Kind::Box:
      o["kind"] = "box";
      o["lower"] = vec_json(s.lower());
      o["upper"] = vec_json(s.upper());
      break;
    case ControlSet::Kind::Ball:
      o["kind"] = "ball";
      o["center"] = vec_json(s.center());
      o["radius"] = num_json(s.radius());
      break;
    case ControlSet::Kind::Finite:
      o["kind"] = "finite";
      o["points"] = vecs_json(s.points());
      break;
  }
  return o;
}

ControlSet control_set(const Json& j) {
  const std::string kind = str(field(j, "kind"));
  if (kind == "box") return ControlSet::box(vec(field(j, "lower")), vec(field(j, "upper")));
  if (kind == "ball") return ControlSet::ball(vec(field(j, "center")), num(field(j, "radius")));
  if (kind == "finite") return ControlSet::finite(vecs(field(j, "points")));
  bad("unknown control set kind \"" + kind + "\"");
}

Json problem_json(const SweepingProblem& p) {
  Json o;
  o["name"] = p.name;
  o["n"] = p.n;
  o["m"] = p.m;
  o["d"] = p.d;
  o["horizon"] = num_json(p.horizon);
  o["x0"] = vec_json(p.x0);
  Json g;
  if (p.g.is_identity()) {
    g["kind"] = "identity";
  } else {
    g["kind"] = "affine";
    g["gx"] = mat_json(p.g.gx());
    g["gu"] = mat_json(p.g.gu());
    g["c"] = vec_json(p.g.c());
  }
  o["g"] = g;
  o["controls"] = control_set_json(p.controls);
  Json phi;
  phi["q"] = mat_json(p.phi.q);
  phi["c"] = vec_json(p.phi.c);
  phi["c0"] = num_json(p.phi.c0);
  o["phi"] = phi;
  Json ell = Json::object();
  for (int b = 0; b < RunningCost::Count; ++b) {
    if (!p.ell.uses(b)) continue;
    Json blk;
    if (p.ell.blocks[b].weight.size() > 0) blk["weight"] = vec_json(p.ell.blocks[b].weight);
    if (p.ell.blocks[b].linear.size() > 0) blk["linear"] = vec_json(p.ell.blocks[b].linear);
    ell[RunningCost::block_name(b)] = blk;
  }
  o["ell"] = ell;
  Json mv;
  mv["kind"] = to_string(p.moving.kind);
  mv["a0"] = mat_json(p.moving.a0);
  mv["b0"] = vec_json(p.moving.b0);
  if (p.moving.kind == MovingSet::Kind::Sampled) {
    mv["times"] = reals_json(p.moving.times);
    mv["a_samples"] = mats_json(p.moving.a_samples);
    mv["b_samples"] = vecs_json(p.moving.b_samples);
  }
  if (p.moving.band_delta) mv["band_delta"] = num_json(*p.moving.band_delta);
  o["moving"] = mv;
  return o;
}

SweepingProblem problem_from(const Json& j) {
  SweepingProblem p;
  p.name = j.contains("name") ? str(j.at("name")) : "";
  p.n = integer(field(j, "n"));
  p.m = integer(field(j, "m"));
  p.d = integer(field(j, "d"));
  p.horizon = num(field(j, "horizon"));
  p.x0 = vec(field(j, "x0"));
  const Json& g = field(j, "g");
  const std::string gk = str(field(g, "kind"));
  if (gk == "identity")
    p.g = Perturbation::identity(p.n);
  else if (gk == "affine")
    p.g = Perturbation::affine(mat(field(g, "gx")), mat(field(g, "gu")), vec(field(g, "c")));
  else
    bad("unknown perturbation kind \"" + gk + "\"");
  p.controls = control_set(field(j, "controls"));
  const Json& phi = field(j, "phi");
  p.phi.c = vec(field(phi, "c"));
  p.phi.q = phi.contains("q") && !phi.at("q").empty() ? mat(phi.at("q")) : Mat::Zero(p.phi.c.size(), p.phi.c.size());
  p.phi.c0 = phi.contains("c0") ? num(phi.at("c0")) : 0.0;
  const Json& ell = field(j, "ell");
  if (!ell.is_object()) bad("\"ell\" must be an object");
  for (auto it = ell.begin(); it != ell.end(); ++it) {
    int b = 0;
    while (b < RunningCost::Count && it.key() != RunningCost::block_name(b)) ++b;
    if (b == RunningCost::Count) bad("unknown running cost block \"" + it.key() + "\"");
    if (it.value().contains("weight")) p.ell.blocks[b].weight = vec(it.value().at("weight"));
    if (it.value().contains("linear")) p.ell.blocks[b].linear = vec(it.value().at("linear"));
  }
  const Json& mv = field(j, "moving");
  const std::string mk = str(field(mv, "kind"));
  if (mk == "fixed")
    p.moving.kind = MovingSet::Kind::Fixed;
  else if (mk == "sampled")
    p.moving.kind = MovingSet::Kind::Sampled;
  else if (mk == "decision")
    p.moving.kind = MovingSet::Kind::Decision;
  else
    bad("unknown moving set kind \"" + mk + "\"");
  p.moving.a0 = mat(field(mv, "a0"));
  p.moving.b0 = vec(field(mv, "b0"));
  if (p.moving.kind == MovingSet::Kind::Sampled) {
    p.moving.times = reals(field(mv, "times"));
    p.moving.a_samples = mats(field(mv, "a_samples"));
    p.moving.b_samples = vecs(field(mv, "b_samples"));
  }
  if (mv.contains("band_delta")) p.moving.band_delta = num(mv.at("band_delta"));
  p.validate();
  return p;
}

Json reference_json(const Reference& r) {
  Json o;
  o["t"] = reals_json(r.t);
  o["x"] = vecs_json(r.x);
  o["xdot"] = vecs_json(r.xdot);
  o["a"] = mats_json(r.a);
  o["adot"] = mats_json(r.adot);
  o["b"] = vecs_json(r.b);
  o["bdot"] = vecs_json(r.bdot);
  o["u"] = vecs_json(r.u);
  return o;
}

Reference reference_from(const Json& j) {
  Reference r;
  r.t = reals(field(j, "t"));
  r.x = vecs(field(j, "x"));
  r.xdot = vecs(field(j, "xdot"));
  r.a = mats(field(j, "a"));
  r.adot = mats(field(j, "adot"));
  r.b = vecs(field(j, "b"));
  r.bdot = vecs(field(j, "bdot"));
  r.u = vecs(field(j, "u"));
  r.validate();
  return r;
}

Json quadruple_json(const DiscreteQuadruple& q) {
  Json o;
  o["mesh"] = reals_json(q.mesh.t);
  o["x"] = vecs_json(q.x);
  o["a"] = mats_json(q.a);
  o["b"] = vecs_json(q.b);
  o["u"] = vecs_json(q.u);
  o["eta"] = vecs_json(q.eta);
  o["hit_step"] = q.hit_step ? Json(*q.hit_step) : Json(nullptr);
  return o;
}

DiscreteQuadruple quadruple_from(const Json& j) {
  DiscreteQuadruple q;
  q.mesh.t = reals(field(j, "mesh"));
  q.mesh.validate();
  q.x = vecs(field(j, "x"));
  q.a = mats(field(j, "a"));
  q.b = vecs(field(j, "b"));
  q.u = vecs(field(j, "u"));
  q.eta = j.contains("eta") ? vecs(j.at("eta")) : std::vector<Vec>{};
  if (j.contains("hit_step") && !j.at("hit_step").is_null()) q.hit_step = integer(j.at("hit_step"));
  const std::size_t nu = static_cast<std::size_t>(q.nu());
  if (q.x.size() != nu + 1 || q.a.size() != nu + 1 || q.b.size() != nu + 1 || q.u.size() != nu)
    throw Error(ErrorKind::DimensionMismatch, "quadruple arrays do not match the mesh");
  return q;
}

}  // namespace

std::string canonical(const std::string& json_text) { return dump(parse(json_text)); }

std::string dump_problem(const SweepingProblem& p) { return dump(problem_json(p)); }
SweepingProblem load_problem(const std::string& text) { return problem_from(parse(text)); }

std::string dump_discrete(const DiscreteProblem& dp) {
  Json o;
  o["problem"] = problem_json(dp.base);
  o["mesh"] = reals_json(dp.mesh.t);
  if (dp.reference) o["reference"] = reference_json(*dp.reference);
  o["epsilon"] = num_json(dp.epsilon);
  o["delta_k"] = num_json(dp.delta_k);
  if (dp.u0) o["u0"] = vec_json(*dp.u0);
  Json w = Json::array();
  for (const ControlWindow& win : dp.windows) {
    Json e;
    e["t0"] = num_json(win.t0);
    e["t1"] = num_json(win.t1);
    e["set"] = control_set_json(win.set);
    w.push_back(e);
  }
  o["windows"] = w;
  o["mode"] = to_string(dp.mode);
  o["tol"] = num_json(dp.tol);
  return dump(o);
}

DiscreteProblem load_discrete(const std::string& text) {
  const Json j = parse(text);
  DiscreteProblem dp;
  dp.base = problem_from(field(j, "problem"));
  if (j.at("mesh").is_number_integer())
    dp.mesh = Mesh::uniform(dp.base.horizon, integer(j.at("mesh")));
  else
    dp.mesh.t = reals(field(j, "mesh"));
  if (j.contains("reference")) dp.reference = reference_from(j.at("reference"));
  if (j.contains("epsilon")) dp.epsilon = num(j.at("epsilon"));
  if (j.contains("delta_k")) dp.delta_k = num(j.at("delta_k"));
  if (j.contains("u0")) dp.u0 = vec(j.at("u0"));
  if (j.contains("windows"))
    for (const Json& e : j.at("windows")) dp.windows.push_back({num(field(e, "t0")), num(field(e, "t1")), control_set(field(e, "set"))});
  if (j.contains("mode")) {
    const std::string m = str(j.at("mode"));
    if (m == "explicit")
      dp.mode = StepMode::Explicit;
    else if (m == "projective")
      dp.mode = StepMode::Projective;
    else
      bad("unknown step mode \"" + m + "\"");
  }
  if (j.contains("tol")) dp.tol = num(j.at("tol"));
  dp.validate();
  return dp;
}

std::string dump_polyhedron(const Polyhedron& p) {
  Json o;
  o["rows"] = mat_json(p.rows());
  o["offsets"] = vec_json(p.offsets());
  if (p.norm_band()) o["norm_band"] = Json::array({num_json(p.norm_band()->first), num_json(p.norm_band()->second)});
  return dump(o);
}

Polyhedron load_polyhedron(const std::string& text) {
  const Json j = parse(text);
  std::optional<Polyhedron::Band> band;
  if (j.contains("norm_band")) {
    const Vec b = vec(j.at("norm_band"));
    if (b.size() != 2) bad("norm_band needs two entries");
    band = Polyhedron::Band{b(0), b(1)};
  }
  return Polyhedron(mat(field(j, "rows")), vec(field(j, "offsets")), band);
}

std::string dump_controls(const ControlSequence& c) {
  Json o;
  o["u"] = vecs_json(c.u);
  if (!c.a.empty()) o["a"] = mats_json(c.a);
  if (!c.b.empty()) o["b"] = vecs_json(c.b);
  return dump(o);
}

ControlSequence load_controls(const std::string& text) {
  const Json j = parse(text);
  ControlSequence c;
  c.u = vecs(field(j, "u"));
  if (j.contains("a")) c.a = mats(j.at("a"));
  if (j.contains("b")) c.b = vecs(j.at("b"));
  return c;
}

std::string dump_quadruple(const DiscreteQuadruple& q) { return dump(quadruple_json(q)); }
DiscreteQuadruple load_quadruple(const std::string& text) { return quadruple_from(parse(text)); }

std::string trajectory_csv(const DiscreteQuadruple& q) {
  const int n = static_cast<int>(q.x.front().size());
  const int m = static_cast<int>(q.b.front().size());
  const int d = q.u.empty() ? 0 : static_cast<int>(q.u.front().size());
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (int i = 1; i <= m; ++i) out += ",eta" + std::to_string(i);
  for (int i = 1; i <= d; ++i) out += ",u" + std::to_string(i);
  out += "\n";
  for (int j = 0; j <= q.nu(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out += format_number(q.mesh.t[k]);
    for (int i = 0; i < n; ++i) out += "," + format_number(q.x[k](i));
    const bool step = j < q.nu();
    for (int i = 0; i < m; ++i) out += "," + (step && k < q.eta.size() ? format_number(q.eta[k](i)) : std::string());
    for (int i = 0; i < d; ++i) out += "," + (step ? format_number(q.u[k](i)) : std::string());
    out += "\n";
  }
  return out;
}

DiscreteQuadruple trajectory_from_csv(const std::string& text, const SweepingProblem& p, const Mesh& mesh) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) bad("empty trajectory CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const std::size_t cols = 1 + static_cast<std::size_t>(p.n + p.m + p.d);
  if (header.size() != cols || header[0] != "t") bad("trajectory CSV header does not match the problem dimensions");
  DiscreteQuadruple q;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != cols) bad("trajectory CSV row has " + std::to_string(cells.size()) + " cells");
    rows.push_back(std::move(cells));
  }
  if (rows.size() < 2) bad("trajectory CSV needs at least two rows");
  auto number = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      bad("bad number \"" + s + "\" in trajectory CSV");
    }
  };
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& c = rows[r];
    q.mesh.t.push_back(number(c[0]));
    Vec x(p.n);
    for (int i = 0; i < p.n; ++i) x(i) = number(c[static_cast<std::size_t>(1 + i)]);
    q.x.push_back(x);
    const double t = q.mesh.t.back();
    q.a.push_back(p.moving.a_at(t));
    q.b.push_back(p.moving.b_at(t));
    if (r + 1 < rows.size()) {
      Vec eta(p.m), u(p.d);
      for (int i = 0; i < p.m; ++i) eta(i) = number(c[static_cast<std::size_t>(1 + p.n + i)]);
      for (int i = 0; i < p.d; ++i) u(i) = number(c[static_cast<std::size_t>(1 + p.n + p.m + i)]);
      q.eta.push_back(eta);
      q.u.push_back(u);
    }
  }
  q.mesh.validate();
  if (!mesh.t.empty() && !(mesh == q.mesh)) {
    for (std::size_t k = 0; k < mesh.t.size() && mesh.t.size() == q.mesh.t.size(); ++k)
      if (std::abs(mesh.t[k] - q.mesh.t[k]) > 1e-12 * (1.0 + std::abs(mesh.t[k])))
        throw Error(ErrorKind::MeshMismatch, "trajectory times differ from the problem mesh");
    if (mesh.t.size() != q.mesh.t.size()) throw Error(ErrorKind::MeshMismatch, "trajectory length differs from the problem mesh");
    q.mesh = mesh;
  }
  return q;
}

DiscreteQuadruple load_solution(const std::string& text, const SweepingProblem& p, const Mesh& mesh) {
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    DiscreteQuadruple q = load_quadruple(text);
    if (!mesh.t.empty() && !(mesh == q.mesh)) throw Error(ErrorKind::MeshMismatch, "solution mesh differs from the problem mesh");
    return q;
  }
  return trajectory_from_csv(text, p, mesh);
}

std::string certificate_report_json(const CertificateSearch& search, const CertificateReport& report) {
  const DualCertificate& c = search.certificate;
  Json o;
  o["mode"] = to_string(c.mode);
  o["residual"] = num_json(search.residual);
  o["normalized_residual"] = num_json(search.normalized_residual);
  o["max_family_residual"] = num_json(report.max_residual);
  Json fams;
  for (const FamilyResidual& f : report.families) fams[f.family] = num_json(f.residual);
  o["families"] = fams;
  o["ntc_sum"] = num_json(report.ntc_sum);
  o["ntc1_sum"] = num_json(report.ntc1_sum);
  o["patterns_tried"] = search.patterns_tried;
  o["ambiguous_cells"] = search.ambiguous_cells;
  o["budget_exceeded"] = search.budget_exceeded;
  Json pats = Json::array();
  for (std::size_t k = 0; k < search.patterns.size(); ++k) {
    Json e;
    Json cells = Json::array();
    for (const auto& row : search.patterns[k]) {
      Json r = Json::array();
      for (GammaCase g : row) r.push_back(to_string(g));
      cells.push_back(r);
    }
    e["cases"] = cells;
    e["residual"] = num_json(search.pattern_residuals[k]);
    pats.push_back(e);
  }
  o["patterns"] = pats;
  Json w;
  w["lambda"] = num_json(c.lambda);
  w["abnormal"] = c.abnormal;
  w["eta"] = vecs_json(c.eta);
  w["gamma"] = vecs_json(c.gamma);
  w["px"] = vecs_json(c.px);
  if (!c.pa.empty()) {
    w["pa"] = vecs_json(c.pa);
    w["pb"] = vecs_json(c.pb);
    w["alpha1"] = vecs_json(c.alpha1);
    w["alpha2"] = vecs_json(c.alpha2);
  }
  w["psi"] = vecs_json(c.psi);
  Json cases = Json::array();
  for (const auto& row : c.case_pattern) {
    Json r = Json::array();
    for (GammaCase g : row) r.push_back(to_string(g));
    cases.push_back(r);
  }
  w["case_pattern"] = cases;
  o["witness"] = w;
  return dump(o);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  f << text;
}

}  // namespace polysweep::io
