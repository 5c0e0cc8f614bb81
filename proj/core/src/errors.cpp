#include "flexform/errors.hpp"

namespace flexform {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGraph: return "invalid-graph";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorKind::AugmentationFailed: return "augmentation-failed";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::EquilibriumNotFound: return "equilibrium-not-found";
    case ErrorKind::NonGenericEquilibrium: return "non-generic-equilibrium";
    case ErrorKind::AnalysisFailed: return "analysis-failed";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace flexform
