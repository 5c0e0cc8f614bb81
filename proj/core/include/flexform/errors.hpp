#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flexform {

enum class ErrorKind {
  InvalidGraph,
  DimensionMismatch,
  InvalidArgument,
  DegenerateConfiguration,
  AugmentationFailed,
  Precondition,
  Divergence,
  EquilibriumNotFound,
  NonGenericEquilibrium,
  AnalysisFailed,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. The kind is what
/// callers branch on (the CLI maps it to an exit code).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace flexform
