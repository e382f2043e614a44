#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hdm {

enum class ErrorCode {
  InvalidArgument,
  AntipodalPoints,
  NotTangent,
  PcaRankDeficient,
  NeighborCountTooSmall,
  DegenerateOverlap,
  DisconnectedGraph,
  AsymmetricBlocks,
  NegativeWeight,
  ZeroDegreeVertex,
  NoConvergence,
  NotSymmetric,
  NegativeEigenvalue,
  ScaleTooLarge,
  IndexOutOfRange,
  EmptyInput,
  SizeMismatch,
  RegimeMismatch,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Errors caused by bad input (as opposed to a numerical failure on valid input).
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hdm
