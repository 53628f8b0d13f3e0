#pragma once

#include <stdexcept>
#include <string>

namespace wordasimage {

enum class ErrorCode {
  UnsupportedFont,
  MissingGlyph,
  EmptyGlyph,
  InvalidPath,
  DegenerateGeometry,
  SelfIntersecting,
  SizeMismatch,
  NonFiniteCoordinate,
  CanvasMismatch,
  EmptyWord,
  ServiceUnavailable,
  ProtocolError,
  NonFiniteGradient,
  IoError,
  MissingArtifact,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wordasimage
