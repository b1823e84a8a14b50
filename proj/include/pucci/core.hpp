#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <string>

namespace pucci {

/// A point of R^Dim. Only Dim = 1 and Dim = 2 are instantiated.
template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

/// A lattice multi-index or lattice offset.
template <int Dim>
using Index = Eigen::Matrix<int, Dim, 1>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Surface measure of the unit sphere S^{d-1}: 2 for d = 1, 2π for d = 2.
constexpr double sphere_measure(int dim) { return dim == 1 ? 2.0 : 2.0 * kPi; }

enum class ErrorKind {
  InvalidSpec,
  InvalidFunction,
  Divergence,
  SingularPoint,
  Configuration,
  Dimension,
  UnboundedFunction,
  ClassMismatch,
  Resolution,
  NonConvergence,
  Cycling,
  SearchFailure,
  Precondition,
  Domain,
  DegenerateFit,
  DegenerateRatio,
  Construction,
  Internal,
  Io,
};

const char* to_string(ErrorKind kind);

/// The single exception type thrown by the library; `kind()` tells callers
/// which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace pucci
