#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace touchroller {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  NoVisibleSolution,
  DegeneratePoint,
  SceneExhausted,
  GridIncomplete,
  InsufficientPoints,
  SolverDiverged,
  NoValidFrames,
  PatchTooTall,
  NoOverlap,
  DegeneratePoints,
  DimensionMismatch,
  ConfigInvalid,
  InputMissing,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NoVisibleSolution: return "NoVisibleSolution";
    case ErrorCode::DegeneratePoint: return "DegeneratePoint";
    case ErrorCode::SceneExhausted: return "SceneExhausted";
    case ErrorCode::GridIncomplete: return "GridIncomplete";
    case ErrorCode::InsufficientPoints: return "InsufficientPoints";
    case ErrorCode::SolverDiverged: return "SolverDiverged";
    case ErrorCode::NoValidFrames: return "NoValidFrames";
    case ErrorCode::PatchTooTall: return "PatchTooTall";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::DegeneratePoints: return "DegeneratePoints";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InputMissing: return "InputMissing";
  }
  return "Unknown";
}

}  // namespace touchroller
