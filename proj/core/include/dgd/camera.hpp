#pragma once

#include <Eigen/Core>

namespace dgd {

/// Pinhole camera, OpenCV convention (x right, y down, z forward). Pixel (u, v)
/// samples the image plane at integer coordinates, so a point on the optical
/// axis lands exactly on (cx, cy).
struct Camera {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double near_clip = 0.01;

  /// Throws InvalidArgument when intrinsics or the rotation are invalid.
  void validate() const;

  [[nodiscard]] Eigen::Vector3d center() const { return -rotation.transpose() * translation; }
  [[nodiscard]] std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

struct OrbitView {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;
  double radius = 3.0;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  int width = 256;
  int height = 256;
  double fov_deg = 50.0;  // horizontal field of view
};

/// Camera on a sphere around `target` (world +y up), looking at the target.
/// Azimuth 0 sits on +z; positive elevation is above the target.
[[nodiscard]] Camera orbit_camera(const OrbitView& view);

/// World-to-camera pose looking from `eye` at `target` with world +y up.
[[nodiscard]] Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fx, double fy,
                             int width, int height);

}  // namespace dgd
