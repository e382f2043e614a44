#include "hdm/error.hpp"

namespace hdm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AntipodalPoints: return "AntipodalPoints";
    case ErrorCode::NotTangent: return "NotTangent";
    case ErrorCode::PcaRankDeficient: return "PcaRankDeficient";
    case ErrorCode::NeighborCountTooSmall: return "NeighborCountTooSmall";
    case ErrorCode::DegenerateOverlap: return "DegenerateOverlap";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::AsymmetricBlocks: return "AsymmetricBlocks";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ZeroDegreeVertex: return "ZeroDegreeVertex";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::ScaleTooLarge: return "ScaleTooLarge";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::PcaRankDeficient:
    case ErrorCode::DegenerateOverlap:
    case ErrorCode::DisconnectedGraph:
    case ErrorCode::ZeroDegreeVertex:
    case ErrorCode::NoConvergence:
    case ErrorCode::NotSymmetric:
    case ErrorCode::NegativeEigenvalue:
    case ErrorCode::RegimeMismatch:
      return false;
    default:
      return true;
  }
}

}  // namespace hdm
