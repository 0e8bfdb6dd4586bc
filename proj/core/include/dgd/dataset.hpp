#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgd/frame.hpp"
#include "dgd/gaussians.hpp"

namespace dgd {

/// One frame record of a dataset manifest. Paths are relative to the manifest.
struct FrameRecord {
  std::string image;
  std::string features;  // empty: no feature supervision
  double time = 0.0;
  Camera camera;
};

/// JSON document:
///
///   { "version": 1, "pointcloud": "points.ply",
///     "frames": [ { "image": "images/000.png", "features": "features/000.dgdf", "time": 0.5,
///                   "intrinsics": {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..},
///                   "rotation": [9 numbers, world-to-camera, row-major],
///                   "translation": [3 numbers] } ] }
struct DatasetManifest {
  std::string pointcloud;  // optional
  std::vector<FrameRecord> frames;
};

struct Dataset {
  std::vector<Frame> frames;
  std::optional<PointCloud> pointcloud;
  std::size_t feature_dim = 0;
};

[[nodiscard]] DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Decodes images to [0, 1] floats and upsamples smaller feature maps to the
/// image size. Throws ParseError, MissingFile, DimensionMismatch (frames
/// disagree on C), TimeOutOfRange.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& manifest_path);

}  // namespace dgd
