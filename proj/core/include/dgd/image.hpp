#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dgd/semantics.hpp"

namespace dgd {

/// 8-bit interleaved image, 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Image&, const Image&) = default;
};

/// Decodes any PNG to gray (channels = 1) or RGB (channels = 3).
[[nodiscard]] Image read_png(const std::filesystem::path& path, int channels = 3);
void write_png(const std::filesystem::path& path, const Image& image);
[[nodiscard]] std::string encode_png(const Image& image);
[[nodiscard]] Image decode_png(std::span<const std::uint8_t> bytes, int channels = 3);

/// Clamps to [0, 1] and rounds to 8 bits.
template <typename T>
[[nodiscard]] Image to_image(std::span<const T> values, int width, int height, int channels);

[[nodiscard]] std::vector<float> to_float(const Image& image);

/// 0 -> 0 (background), 1 -> 255 (selected).
[[nodiscard]] Image mask_to_image(const Mask& mask);
/// Any nonzero pixel counts as selected.
[[nodiscard]] Mask image_to_mask(const Image& image);

void write_mask(const std::filesystem::path& path, const Mask& mask);
[[nodiscard]] Mask read_mask(const std::filesystem::path& path);

}  // namespace dgd
