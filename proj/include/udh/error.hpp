#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace udh {

enum class ErrorCode {
  DegenerateProjection,
  CollinearCorners,
  IllConditionedSystem,
  SingularHomography,
  ShapeMismatch,
  NoForwardState,
  DegenerateStd,
  ImageTooSmall,
  EmptyDataset,
  EmptySplit,
  UnknownPreset,
  MissingGroundTruth,
  InvalidConfig,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` lets callers
// (the training loop, the CLI exit-code mapping) branch on the failure kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Numeric failures come from the solver/warp stack; the rest are data or config problems.
  bool is_numeric() const noexcept {
    return code_ == ErrorCode::DegenerateProjection || code_ == ErrorCode::CollinearCorners ||
           code_ == ErrorCode::IllConditionedSystem || code_ == ErrorCode::SingularHomography ||
           code_ == ErrorCode::DegenerateStd;
  }

 private:
  ErrorCode code_;
};

}  // namespace udh
