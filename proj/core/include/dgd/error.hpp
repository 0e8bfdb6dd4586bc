#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgd {

enum class Errc {
  InvalidArgument,
  ZeroQuaternion,
  EmptyPointCloud,
  InvalidBox,
  ShapeMismatch,
  SingularCovariance,
  PixelOutOfBounds,
  ZeroQuery,
  EmptyPixel,
  ParseError,
  MissingFile,
  DimensionMismatch,
  TimeOutOfRange,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  IoError,
};

[[nodiscard]] std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI, the HTTP service) can map it without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace dgd
