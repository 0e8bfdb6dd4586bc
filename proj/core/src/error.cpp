#include "dgd/error.hpp"

namespace dgd {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ZeroQuaternion: return "ZeroQuaternion";
    case Errc::EmptyPointCloud: return "EmptyPointCloud";
    case Errc::InvalidBox: return "InvalidBox";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::PixelOutOfBounds: return "PixelOutOfBounds";
    case Errc::ZeroQuery: return "ZeroQuery";
    case Errc::EmptyPixel: return "EmptyPixel";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingFile: return "MissingFile";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::TimeOutOfRange: return "TimeOutOfRange";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

}  // namespace dgd
