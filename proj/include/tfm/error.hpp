#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tfm {

// Numeric values double as CLI exit codes.
enum class ErrorCode {
  kInvalidArgument = 2,
  kNumerical = 3,
  kIo = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when an adaptive or whole-line integral misses its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(ErrorCode::kNumerical, what), achieved_(achieved) {}

  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A Fisher matrix that cannot be inverted. `null_direction` spans the
/// parameter combination the measurement cannot identify.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, std::vector<double> null_direction)
      : Error(ErrorCode::kNumerical, what), null_direction_(std::move(null_direction)) {}

  const std::vector<double>& null_direction() const noexcept { return null_direction_; }

 private:
  std::vector<double> null_direction_;
};

/// Gram-Schmidt met a vector that lies (numerically) in the span of its
/// predecessors.
class RankDeficiencyError : public Error {
 public:
  RankDeficiencyError(const std::string& what, int index)
      : Error(ErrorCode::kNumerical, what), index_(index) {}

  int index() const noexcept { return index_; }

 private:
  int index_;
};

/// POVM elements whose sum exceeds the identity. `direction` is the
/// coefficient-space vector on which the excess is attained.
class PovmValidityError : public Error {
 public:
  PovmValidityError(const std::string& what, double top_eigenvalue, std::vector<double> direction)
      : Error(ErrorCode::kInvalidArgument, what),
        top_eigenvalue_(top_eigenvalue),
        direction_(std::move(direction)) {}

  double top_eigenvalue() const noexcept { return top_eigenvalue_; }
  const std::vector<double>& direction() const noexcept { return direction_; }

 private:
  double top_eigenvalue_;
  std::vector<double> direction_;
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, what);
}

[[noreturn]] inline void throw_numerical(const std::string& what) {
  throw Error(ErrorCode::kNumerical, what);
}

}  // namespace tfm
