#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dgd/camera.hpp"
#include "dgd/gaussians.hpp"
#include "dgd/semantics.hpp"

namespace dgd {

/// "two-blob": cluster A translates along a straight line over t in [0, 1],
/// cluster B stays put. Colors and feature means (e_0, e_1) differ per cluster.
struct SynthConfig {
  std::size_t gaussians_per_cluster = 256;
  std::size_t train_frames = 24;
  std::size_t test_frames = 6;
  int width = 128;
  int height = 128;
  double focal = 140.0;
  double orbit_radius = 3.0;
  double azimuth_range_deg = 30.0;  // cameras sweep [-range, +range]
  double elevation_deg = 10.0;
  std::size_t feature_dim = 8;
  double cluster_radius = 0.2;
  double gaussian_scale = 0.05;
  double opacity = 0.95;
  double feature_noise = 0.01;
  double pointcloud_noise = 0.01;
  Eigen::Vector3d moving_start{-0.5, 0.4, 0.0};
  Eigen::Vector3d moving_end{0.5, 0.4, 0.0};
  Eigen::Vector3d static_center{0.0, -0.4, 0.0};
  std::uint64_t seed = 0;
};

struct SynthFrame {
  std::string name;
  Camera camera;
  double time = 0.0;
};

/// Generator ground truth. `scene` holds the Gaussians at t = 0.
struct SynthTruth {
  SynthConfig config;
  GaussianSet<double> scene;
  std::vector<int> cluster;  // 0 = A (moving), 1 = B (static), per Gaussian
  std::vector<SynthFrame> train;
  std::vector<SynthFrame> test;

  /// Offset of cluster A at time t relative to t = 0.
  [[nodiscard]] Eigen::Vector3d motion(double t) const;
  /// The generator scene at time t.
  [[nodiscard]] GaussianSet<double> at(double t) const;
  [[nodiscard]] std::vector<std::size_t> members(int cluster_id) const;
  /// Mean canonical feature of a cluster.
  [[nodiscard]] std::vector<double> mean_feature(int cluster_id) const;
};

[[nodiscard]] SynthTruth make_two_blob(const SynthConfig& config);

/// Orbit camera at `azimuth_deg`, with the configured elevation, radius and focal length.
[[nodiscard]] Camera synth_camera(const SynthConfig& config, double azimuth_deg);

/// Ground-truth object mask: the cluster rendered alone at t, alpha >= threshold
/// (the same rule as render_segmentation_mask).
[[nodiscard]] Mask truth_mask(const SynthTruth& truth, int cluster_id, const Camera& camera, double t,
                              double mask_alpha_threshold = kDefaultMaskAlphaThreshold);

/// Writes the dataset under `dir`:
///   train.json, test.json            manifests
///   images/<frame>.png, features/<frame>.dgdf
///   masks/A/<frame>.png, masks/B/<frame>.png
///   points.ply                       noisy generator positions and colors at t = 0
///   query_A.dgdq, query_B.dgdq       cluster mean features
///   truth.json                       membership, motion path, t = 0 positions
/// Throws IoError.
void write_synth_dataset(const std::filesystem::path& dir, const SynthTruth& truth);

/// Reads truth.json back (positions, membership and motion only).
[[nodiscard]] SynthTruth read_synth_truth(const std::filesystem::path& path);

}  // namespace dgd
