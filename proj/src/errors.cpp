#include "gcog/errors.hpp"

namespace gcog {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::LocationOccupied: return "LocationOccupied";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::MissingReferent: return "MissingReferent";
    case ErrorCode::AmbiguousStimulus: return "AmbiguousStimulus";
    case ErrorCode::ConstraintConflict: return "ConstraintConflict";
    case ErrorCode::GridFull: return "GridFull";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::TruncatedShard: return "TruncatedShard";
    case ErrorCode::MalformedShard: return "MalformedShard";
    case ErrorCode::DegenerateSplit: return "DegenerateSplit";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> position) {
  std::string out(error_code_name(code));
  if (position) {
    out += " at " + std::to_string(*position);
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> position)
    : std::runtime_error(decorate(code, message, position)), code_(code), position_(position) {}

}  // namespace gcog
