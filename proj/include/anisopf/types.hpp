#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace anisopf {

using Index = std::int32_t;

// Small vectors and matrices in R^d, d in {2,3}; stack storage up to 3.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

using Vector = Eigen::VectorXd;

enum class ErrorKind {
  ZeroDirection,
  InvalidDelta,
  NotRotation,
  InvalidAnisotropy,
  UnknownPreset,
  NotApplicable,
  InvalidN,
  RefinementDepthExceeded,
  MeshMismatch,
  MeshChanged,
  InterfaceTooWide,
  InconsistentDimensions,
  ZeroDiagonal,
  NonConvergence,
  SingularSystem,
  NewtonDivergence,
  ParseError,
  ValidationError,
  IoError,
  StabilityViolation,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception; `kind()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace anisopf
