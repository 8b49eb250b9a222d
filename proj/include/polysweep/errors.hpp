#pragma once

#include <stdexcept>
#include <string>

namespace polysweep {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  InfeasiblePoint,
  EmptyPolyhedron,
  NotInNormalCone,
  NotInGraph,
  DomainViolation,
  PLICQViolation,
  StepFailure,
  InfeasibleInput,
  MeshMismatch,
  FamilyMismatch,
  NoFeasibleStart,
  PrimalInfeasible,
  PatternBudgetExceeded,
  ParseError,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so that the CLI and the
// Python layer can report it by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace polysweep
