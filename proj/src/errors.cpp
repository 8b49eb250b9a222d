#include "polysweep/errors.hpp"

namespace polysweep {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorKind::EmptyPolyhedron: return "EmptyPolyhedron";
    case ErrorKind::NotInNormalCone: return "NotInNormalCone";
    case ErrorKind::NotInGraph: return "NotInGraph";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::PLICQViolation: return "PLICQViolation";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::InfeasibleInput: return "InfeasibleInput";
    case ErrorKind::MeshMismatch: return "MeshMismatch";
    case ErrorKind::FamilyMismatch: return "FamilyMismatch";
    case ErrorKind::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorKind::PrimalInfeasible: return "PrimalInfeasible";
    case ErrorKind::PatternBudgetExceeded: return "PatternBudgetExceeded";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace polysweep
