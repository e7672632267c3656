#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gcog {

// Error classes are part of the public contract; tests compare codes, not messages.
enum class ErrorCode {
  OutOfRange,
  LocationOccupied,
  InvalidDepth,
  Unsupported,
  SyntaxError,
  TypeMismatch,
  MissingReferent,
  AmbiguousStimulus,
  ConstraintConflict,
  GridFull,
  FormatVersionMismatch,
  ChecksumMismatch,
  TruncatedShard,
  MalformedShard,
  DegenerateSplit,
  EmptyHistogram,
  InvalidArgument,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt);

  ErrorCode code() const noexcept { return code_; }

  /// Character offset into the parsed text, set for SyntaxError and TypeMismatch from the parser.
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

}  // namespace gcog
