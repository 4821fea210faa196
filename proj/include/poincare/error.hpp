#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poincare {

enum class ErrorKind {
  DegenerateGeometry,
  NonPlanarFace,
  CurvilinearFace,
  InvalidFaceSelection,
  DependentNormals,
  Precondition,
  InvalidFlux,
  InvalidSplit,
  InvalidPlan,
  UnknownField,
  Parse,
  Solver,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::NonPlanarFace: return "non-planar-face";
    case ErrorKind::CurvilinearFace: return "curvilinear-face";
    case ErrorKind::InvalidFaceSelection: return "invalid-face-selection";
    case ErrorKind::DependentNormals: return "dependent-normals";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::InvalidFlux: return "invalid-flux";
    case ErrorKind::InvalidSplit: return "invalid-split";
    case ErrorKind::InvalidPlan: return "invalid-plan";
    case ErrorKind::UnknownField: return "unknown-field";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Solver: return "solver";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` lets callers dispatch.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace poincare
