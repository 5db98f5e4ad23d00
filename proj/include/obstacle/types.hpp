#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace obstacle {

// Points, vectors and matrices in dimension n <= 3. Fixed maximum size keeps
// every small-matrix operation on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr int kMaxDim = 3;

enum class ErrorCode {
  InvalidArgument,
  NonSymmetric,
  EllipticityViolation,
  ForcingBelowC0,
  OriginEvaluation,
  SquareRootFailure,
  GridTooCoarse,
  MaxIterExceeded,
  InfeasibleBoundary,
  EmptyInterior,
  RadiusOutOfDomain,
  BallOutOfDomain,
  NoFiniteConstants,
  NotSingularPoint,
  FrameOverflow,
  NoConvergence,
  AmbiguousProfile,
  InsufficientDecay,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class LabError : public std::runtime_error {
 public:
  LabError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obstacle
