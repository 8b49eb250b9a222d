// Python extension: numeric kernels take NumPy arrays, problem-level calls
// exchange the canonical JSON documents of the CLI.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "polysweep/certify.hpp"
#include "polysweep/coderivatives.hpp"
#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"
#include "polysweep/io.hpp"
#include "polysweep/nnls.hpp"
#include "polysweep/solve.hpp"

namespace py = pybind11;
using namespace polysweep;

namespace {

EtaBranch branch_of(const std::string& s) {
  if (s == "any") return EtaBranch::Any;
  if (s == "resting") return EtaBranch::Resting;
  throw Error(ErrorKind::InvalidArgument, "branch must be 'any' or 'resting'");
}

py::dict descriptor_dict(const CoderivDescriptor& d) {
  py::dict out;
  out["empty"] = d.empty();
  out["zero"] = d.zero_indices;
  out["nonneg"] = d.nonneg_indices;
  out["free"] = d.free_indices;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sweeping-process optimal control kernels";
  static py::exception<Error> error(m, "PolysweepError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      exc.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error.ptr(), exc.ptr());
    }
  });

  m.def(
      "project",
      [](const Mat& rows, const Vec& offsets, const Vec& y) {
        const Projection pr = project(Polyhedron(rows, offsets), y);
        return py::make_tuple(pr.x, pr.multipliers);
      },
      py::arg("rows"), py::arg("offsets"), py::arg("y"), "Projection onto {x : rows x <= offsets} and its multipliers.");
  m.def(
      "normal_cone_multipliers",
      [](const Mat& rows, const Vec& offsets, const Vec& x, const Vec& v, double tol) {
        return normal_cone_multipliers(Polyhedron(rows, offsets), x, v, tol);
      },
      py::arg("rows"), py::arg("offsets"), py::arg("x"), py::arg("v"), py::arg("tol") = -1.0);
  m.def(
      "nnls",
      [](const Mat& a, const Vec& v) {
        const NnlsResult r = nnls(a, v);
        return py::make_tuple(r.x, r.residual);
      },
      py::arg("a"), py::arg("v"), "min |a z - v| over z >= 0.");
  m.def(
      "coderiv_orthant", [](const Vec& x, const Vec& v, const Vec& w, double tol) { return descriptor_dict(coderiv_orthant(x, v, w, tol)); },
      py::arg("x"), py::arg("v"), py::arg("w"), py::arg("tol") = 1e-9);

  m.def("example8_discrete", [](int nu) { return io::dump_discrete(example8::discrete(nu)); }, py::arg("nu") = 2);
  m.def(
      "example8_controls",
      [](int nu, const std::string& which) {
        const Vec second = which == "optimal" ? example8::optimal_control() : example8::constrained_control();
        return io::dump_controls(example8::controls(nu, second));
      },
      py::arg("nu") = 2, py::arg("which") = "optimal");

  m.def(
      "simulate",
      [](const std::string& discrete, const std::string& controls) {
        const DiscreteProblem dp = io::load_discrete(discrete);
        SimulateOptions so;
        so.mode = dp.mode;
        so.tol = dp.tol;
        return io::dump_quadruple(simulate(dp.base, io::load_controls(controls), dp.mesh, so).q);
      },
      py::arg("discrete"), py::arg("controls"), "Rollout; returns the quadruple JSON.");
  m.def(
      "trajectory_csv", [](const std::string& quadruple) { return io::trajectory_csv(io::load_quadruple(quadruple)); },
      py::arg("quadruple"));
  m.def(
      "cost",
      [](const std::string& discrete, const std::string& quadruple) {
        const CostBreakdown c = cost_Jk(io::load_discrete(discrete), io::load_quadruple(quadruple));
        py::dict out;
        out["terminal"] = c.terminal;
        out["running"] = c.running;
        out["proximity"] = c.proximity;
        out["total"] = c.total;
        return out;
      },
      py::arg("discrete"), py::arg("quadruple"));
  m.def(
      "reduced_halfspace",
      [](const std::string& discrete, const std::string& branch) {
        const ReducedSolution r = solve_reduced_halfspace(io::load_discrete(discrete), branch_of(branch));
        py::dict out;
        out["u"] = r.u;
        out["cost"] = r.cost;
        out["eta_leading"] = r.eta_leading;
        out["label"] = r.label;
        py::list cands;
        for (const ReducedCandidate& c : r.candidates) {
          py::dict d;
          d["label"] = c.label;
          d["u"] = c.u;
          d["eta_leading"] = c.eta_leading;
          d["cost"] = c.cost;
          d["feasible"] = c.feasible;
          cands.append(d);
        }
        out["candidates"] = cands;
        return out;
      },
      py::arg("discrete"), py::arg("branch") = "any");
  m.def(
      "solve",
      [](const std::string& discrete, const std::string& init_controls, int starts, std::uint64_t seed, const std::string& branch) {
        const DiscreteProblem dp = io::load_discrete(discrete);
        SolveOptions so;
        so.starts = starts;
        so.seed = seed;
        so.branch = branch_of(branch);
        SimulateOptions sim;
        sim.mode = dp.mode;
        sim.tol = dp.tol;
        const DiscreteQuadruple init = simulate(dp.base, io::load_controls(init_controls), dp.mesh, sim).q;
        SolveResult r;
        {
          py::gil_scoped_release release;
          r = solve_Pk(dp, init, so);
        }
        py::dict out;
        out["quadruple"] = io::dump_quadruple(r.q);
        out["cost"] = r.cost.total;
        out["max_violation"] = r.residuals.max_violation;
        out["evaluations"] = r.evaluations;
        out["budget_exceeded"] = r.budget_exceeded;
        return out;
      },
      py::arg("discrete"), py::arg("init_controls"), py::arg("starts") = 16, py::arg("seed") = 0, py::arg("branch") = "any");
  m.def(
      "certify",
      [](const std::string& discrete, const std::string& quadruple, const std::string& mode, bool exhaustive) {
        const DiscreteProblem dp = io::load_discrete(discrete);
        const DiscreteQuadruple q = io::load_quadruple(quadruple);
        CertifyOptions co;
        if (mode == "th71") co.mode = CertifyMode::Th71;
        else if (mode != "th72") throw Error(ErrorKind::InvalidArgument, "mode must be 'th71' or 'th72'");
        co.exhaustive = exhaustive;
        const CertificateSearch s = find_certificate(dp, q, co);
        return io::certificate_report_json(s, check_certificate(dp, q, s.certificate, co));
      },
      py::arg("discrete"), py::arg("quadruple"), py::arg("mode") = "th72", py::arg("exhaustive") = false,
      "Certificate search; returns the report JSON.");
}
