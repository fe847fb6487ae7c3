#include "udh/error.hpp"

namespace udh {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateProjection: return "DegenerateProjection";
    case ErrorCode::CollinearCorners: return "CollinearCorners";
    case ErrorCode::IllConditionedSystem: return "IllConditionedSystem";
    case ErrorCode::SingularHomography: return "SingularHomography";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoForwardState: return "NoForwardState";
    case ErrorCode::DegenerateStd: return "DegenerateStd";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

}  // namespace udh
