#pragma once

#include <string>

#include "polysweep/certify.hpp"
#include "polysweep/solve.hpp"

namespace polysweep::io {

// Canonical JSON: fixed key order, two-space indentation and every number
// printed with 17 significant digits, so load followed by dump reproduces the
// input byte for byte.  Parse failures raise ParseError.
std::string dump_problem(const SweepingProblem& p);
SweepingProblem load_problem(const std::string& text);

std::string dump_discrete(const DiscreteProblem& dp);
DiscreteProblem load_discrete(const std::string& text);

std::string dump_polyhedron(const Polyhedron& p);
Polyhedron load_polyhedron(const std::string& text);

std::string dump_controls(const ControlSequence& c);
ControlSequence load_controls(const std::string& text);

std::string dump_quadruple(const DiscreteQuadruple& q);
DiscreteQuadruple load_quadruple(const std::string& text);

// Either a quadruple JSON object or a trajectory CSV; CSV rows rebuild (a, b)
// from the moving set of p.
DiscreteQuadruple load_solution(const std::string& text, const SweepingProblem& p, const Mesh& mesh);

// Plot-ready trajectory: t, x1..xn, eta1..etam, u1..ud.  The last row carries
// the terminal state with empty eta and u cells.
std::string trajectory_csv(const DiscreteQuadruple& q);
DiscreteQuadruple trajectory_from_csv(const std::string& text, const SweepingProblem& p, const Mesh& mesh);

std::string certificate_report_json(const CertificateSearch& search, const CertificateReport& report);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

// Re-renders any JSON text in the canonical layout.
std::string canonical(const std::string& json_text);

// %.17g rendering used by every writer.
std::string format_number(double v);

}  // namespace polysweep::io
