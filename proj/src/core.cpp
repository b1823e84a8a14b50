#include "pucci/core.hpp"

namespace pucci {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidFunction: return "invalid-function";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::SingularPoint: return "singular-point";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::UnboundedFunction: return "unbounded-function";
    case ErrorKind::ClassMismatch: return "class-mismatch";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Cycling: return "cycling";
    case ErrorKind::SearchFailure: return "search-failure";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateFit: return "degenerate-fit";
    case ErrorKind::DegenerateRatio: return "degenerate-ratio";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Internal: return "internal";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace pucci
