#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dgd/math.hpp"

namespace dgd {

/// Structure-of-arrays scene: every learnable per-Gaussian parameter, stored
/// in its unconstrained domain.
///
///   positions       N x 3  world-space means
///   rotations       N x 4  quaternion (w, x, y, z), not normalized
///   log_scales      N x 3  log of the per-axis standard deviation
///   opacity_logits  N      logit of opacity
///   color_logits    N x 3  logit of RGB; the rendered color is sigmoid(.)
///   features        N x C  semantic feature vectors (no activation)
template <typename T>
struct GaussianSet {
  std::size_t feature_dim = 0;
  std::vector<T> positions;
  std::vector<T> rotations;
  std::vector<T> log_scales;
  std::vector<T> opacity_logits;
  std::vector<T> color_logits;
  std::vector<T> features;

  GaussianSet() = default;
  GaussianSet(std::size_t count, std::size_t feature_dim);

  [[nodiscard]] std::size_t size() const noexcept { return opacity_logits.size(); }
  [[nodiscard]] bool empty() const noexcept { return opacity_logits.empty(); }

  [[nodiscard]] Vec3<T> position(std::size_t i) const {
    return {positions[3 * i], positions[3 * i + 1], positions[3 * i + 2]};
  }
  [[nodiscard]] Vec4<T> rotation(std::size_t i) const {
    return {rotations[4 * i], rotations[4 * i + 1], rotations[4 * i + 2], rotations[4 * i + 3]};
  }
  [[nodiscard]] Vec3<T> log_scale(std::size_t i) const {
    return {log_scales[3 * i], log_scales[3 * i + 1], log_scales[3 * i + 2]};
  }
  [[nodiscard]] T opacity(std::size_t i) const { return sigmoid(opacity_logits[i]); }
  [[nodiscard]] Vec3<T> color(std::size_t i) const {
    return {sigmoid(color_logits[3 * i]), sigmoid(color_logits[3 * i + 1]),
            sigmoid(color_logits[3 * i + 2])};
  }
  [[nodiscard]] std::span<const T> feature(std::size_t i) const {
    return {features.data() + i * feature_dim, feature_dim};
  }
  [[nodiscard]] std::span<T> feature(std::size_t i) {
    return {features.data() + i * feature_dim, feature_dim};
  }

  /// Throws ShapeMismatch unless every array matches size() and feature_dim.
  void validate() const;

  /// Copy of the Gaussians at `ids`, in the given order.
  [[nodiscard]] GaussianSet subset(std::span<const std::size_t> ids) const;

  /// Appends Gaussian `i` of `other` (same feature_dim required).
  void push_back_from(const GaussianSet& other, std::size_t i);

  template <typename U>
  [[nodiscard]] GaussianSet<U> cast() const {
    GaussianSet<U> out;
    out.feature_dim = feature_dim;
    const auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
    out.positions = conv(positions);
    out.rotations = conv(rotations);
    out.log_scales = conv(log_scales);
    out.opacity_logits = conv(opacity_logits);
    out.color_logits = conv(color_logits);
    out.features = conv(features);
    return out;
  }

  friend bool operator==(const GaussianSet&, const GaussianSet&) = default;
};

/// Rotation matrix of q / |q|. Throws ZeroQuaternion when |q| <= 1e-12.
template <typename T>
[[nodiscard]] Mat3<T> quat_to_rotation(const Vec4<T>& q);

/// Sigma = R S S^T R^T with S = diag(exp(log_scale)).
template <typename T>
[[nodiscard]] Mat3<T> covariance3d(const Vec4<T>& q, const Vec3<T>& log_scale);

struct PointCloud {
  std::vector<double> points;  // M x 3
  std::vector<double> colors;  // M x 3 in [0, 1]
  [[nodiscard]] std::size_t size() const noexcept { return points.size() / 3; }
};

struct Box {
  Eigen::Vector3d min;
  Eigen::Vector3d max;
};

inline constexpr double kInitialOpacity = 0.1;

/// Positions from the cloud, isotropic log-scales from the mean distance to the
/// 3 nearest neighbours, opacity 0.1, identity rotations and features drawn
/// from N(0, 0.01) with `seed`.
template <typename T>
[[nodiscard]] GaussianSet<T> init_from_pointcloud(const PointCloud& cloud, std::size_t feature_dim,
                                                  std::uint64_t seed);

/// `count` Gaussians uniform in `box`, mid-grey, otherwise as init_from_pointcloud.
template <typename T>
[[nodiscard]] GaussianSet<T> init_random(std::size_t count, const Box& box, std::size_t feature_dim,
                                         std::uint64_t seed);

/// Mean Euclidean distance from each point to its k nearest neighbours (grid
/// accelerated). Points with fewer than k neighbours average what exists; a
/// lone point gets 0.
[[nodiscard]] std::vector<double> mean_knn_distance(std::span<const double> points, std::size_t k);

}  // namespace dgd
