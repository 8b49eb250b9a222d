#include "doctest.h"

#include <cmath>

#include "fixtures.hpp"
#include "polysweep/errors.hpp"
#include "polysweep/example8.hpp"
#include "polysweep/io.hpp"

using namespace polysweep;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("io: numbers use 17 significant digits") {
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(1.0) == "1");
  CHECK(io::format_number(-2.0 / 3.0) == "-0.66666666666666663");
  CHECK(io::format_number(INFINITY) == "\"inf\"");
}

TEST_CASE("io: problem JSON round trip is byte identical") {
  const SweepingProblem p = example8::problem();
  const std::string text = io::dump_problem(p);
  const SweepingProblem back = io::load_problem(text);
  CHECK(io::dump_problem(back) == text);
  CHECK(back.x0 == p.x0);
  CHECK(back.moving.a0 == p.moving.a0);
  CHECK(back.ell.blocks[RunningCost::U].weight == p.ell.blocks[RunningCost::U].weight);
  CHECK(back.g.is_identity());

  fixtures::Synthetic syn;
  const SweepingProblem s = syn.problem(syn.reference(8));
  const std::string st = io::dump_problem(s);
  CHECK(io::dump_problem(io::load_problem(st)) == st);
  CHECK(io::load_problem(st).moving.kind == MovingSet::Kind::Sampled);
}

TEST_CASE("io: discrete problem, controls and quadruple round trip") {
  DiscreteProblem dp = example8::discrete(4);
  const std::string text = io::dump_discrete(dp);
  const DiscreteProblem back = io::load_discrete(text);
  CHECK(io::dump_discrete(back) == text);
  CHECK(back.windows.size() == 1);
  CHECK(back.windows[0].set.kind() == ControlSet::Kind::Finite);
  CHECK(back.mesh == dp.mesh);

  const ControlSequence c = example8::controls(4, example8::optimal_control());
  const std::string ct = io::dump_controls(c);
  CHECK(io::dump_controls(io::load_controls(ct)) == ct);

  const DiscreteQuadruple q = simulate(dp.base, c, dp.mesh).q;
  const std::string qt = io::dump_quadruple(q);
  const DiscreteQuadruple qb = io::load_quadruple(qt);
  CHECK(io::dump_quadruple(qb) == qt);
  CHECK(qb.hit_step == q.hit_step);

  fixtures::Synthetic syn;
  DiscreteProblem withref;
  withref.base = syn.problem(syn.reference(4));
  withref.mesh = Mesh::uniform(1.0, 4);
  withref.reference = syn.reference(4);
  const std::string rt = io::dump_discrete(withref);
  CHECK(io::dump_discrete(io::load_discrete(rt)) == rt);
}

TEST_CASE("io: polyhedron round trip keeps the band") {
  Mat a(2, 2);
  a << 1, 0, 0.6, 0.8;
  const Polyhedron p(a, Vec::Ones(2), Polyhedron::Band{0.9, 1.1});
  const std::string t = io::dump_polyhedron(p);
  const Polyhedron b = io::load_polyhedron(t);
  CHECK(io::dump_polyhedron(b) == t);
  REQUIRE(b.norm_band());
  CHECK(b.norm_band()->second == 1.1);
}

TEST_CASE("io: trajectory CSV") {
  const DiscreteProblem dp = example8::discrete(2);
  const DiscreteQuadruple q = simulate(dp.base, example8::controls(2, example8::optimal_control()), dp.mesh).q;
  const std::string csv = io::trajectory_csv(q);
  CHECK(csv.substr(0, csv.find('\n')) == "t,x1,x2,eta1,u1,u2");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const DiscreteQuadruple back = io::load_solution(csv, dp.base, dp.mesh);
  CHECK(io::trajectory_csv(back) == csv);
  CHECK(back.x[2] == q.x[2]);
  CHECK(back.a[1] == q.a[1]);
  CHECK(io::load_solution(io::dump_quadruple(q), dp.base, dp.mesh).u[1] == q.u[1]);
  CHECK(kind_of([&] { io::load_solution(csv, dp.base, Mesh::uniform(1.0, 4)); }) == ErrorKind::MeshMismatch);
}

TEST_CASE("io: malformed input raises ParseError") {
  CHECK(kind_of([] { io::load_problem("{"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { io::load_problem("{}"); }) == ErrorKind::ParseError);
  std::string text = io::dump_problem(example8::problem());
  text.replace(text.find("\"box\""), 5, "\"blob\"");
  CHECK(kind_of([&] { io::load_problem(text); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { io::trajectory_from_csv("t,x1\n0,1\n", example8::problem(), Mesh{}); }) == ErrorKind::ParseError);
}

TEST_CASE("io: shipped example data matches the built-in problem") {
  const std::string dir = POLYSWEEP_DATA_DIR;
  CHECK(io::read_file(dir + "/example8.json") == io::dump_discrete(example8::discrete(2)));
  CHECK(io::read_file(dir + "/example8_optimal.json") == io::dump_controls(example8::controls(2, example8::optimal_control())));
  CHECK(io::read_file(dir + "/example8_case1.json") == io::dump_controls(example8::controls(2, example8::constrained_control())));
}
