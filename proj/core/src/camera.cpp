#include "dgd/camera.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <numbers>

#include "dgd/error.hpp"

namespace dgd {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(Errc::InvalidArgument, "focal lengths must be positive");
  if (width < 1 || height < 1) throw Error(Errc::InvalidArgument, "image size must be at least 1x1");
  if (!(near_clip > 0.0)) throw Error(Errc::InvalidArgument, "near clip must be positive");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-5 || std::abs(rotation.determinant() - 1.0) > 1e-5) {
    throw Error(Errc::InvalidArgument, "camera rotation must be orthonormal with det 1");
  }
}

Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fx, double fy, int width,
               int height) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d down = -Eigen::Vector3d::UnitY();
  down = (down - down.dot(forward) * forward);
  if (down.norm() < 1e-9) down = Eigen::Vector3d::UnitZ();  // looking straight up/down
  down.normalize();
  const Eigen::Vector3d right = down.cross(forward).normalized();

  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = 0.5 * width;
  cam.cy = 0.5 * height;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -cam.rotation * eye;
  return cam;
}

Camera orbit_camera(const OrbitView& view) {
  constexpr double deg = std::numbers::pi / 180.0;
  const double az = view.azimuth_deg * deg;
  const double el = view.elevation_deg * deg;
  const Eigen::Vector3d offset(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
  const double focal = 0.5 * view.width / std::tan(0.5 * view.fov_deg * deg);
  return look_at(view.target + view.radius * offset, view.target, focal, focal, view.width, view.height);
}

}  // namespace dgd
