#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dgd/deformation.hpp"
#include "dgd/gaussians.hpp"

namespace dgd {

// Binary layouts (all little-endian):
//
//   feature map  "DGDF" u32 version=1, u32 H, u32 W, u32 C, H*W*C f32 (row-major, channel-last)
//   query        "DGDQ" u32 version=1, u32 C, C f32
//   checkpoint   "DGDC" u32 version=1, u32 N, u32 C,
//                u32 depth, u32 width, u32 position bands, u32 time bands,
//                u32 flags (bit 0: position encoding includes input, bit 1: time),
//                f32 blocks: positions, rotations, log_scales, opacity_logits,
//                color_logits, features, then per layer weight (row-major) and bias,
//                u64 iteration
//
// Readers reject short files (TruncatedFile) and trailing bytes (ParseError).

inline constexpr std::uint32_t kFormatVersion = 1;

struct FeatureMap {
  int height = 0;
  int width = 0;
  std::size_t channels = 0;
  std::vector<float> data;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map);
[[nodiscard]] FeatureMap read_feature_map(const std::filesystem::path& path);

/// Corner-aligned bilinear resize: output corners sample input corners.
[[nodiscard]] FeatureMap resize_bilinear(const FeatureMap& map, int height, int width);

void write_query_embedding(const std::filesystem::path& path, std::span<const float> embedding);
[[nodiscard]] std::vector<float> read_query_embedding(const std::filesystem::path& path);

template <typename T>
struct Checkpoint {
  GaussianSet<T> scene;
  DeformationField<T> field;
  std::uint64_t iteration = 0;
};

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const GaussianSet<T>& scene, const DeformationField<T>& field,
                     std::uint64_t iteration);

template <typename T>
[[nodiscard]] Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

/// ASCII PLY: "element vertex" with x, y, z and optional uchar red, green, blue.
[[nodiscard]] PointCloud read_pointcloud_ply(const std::filesystem::path& path);
void write_pointcloud_ply(const std::filesystem::path& path, const PointCloud& cloud);

}  // namespace dgd
