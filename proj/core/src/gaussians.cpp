#include "dgd/gaussians.hpp"

#include <algorithm>
#include <random>

#include "dgd/error.hpp"

namespace dgd {

template <typename T>
GaussianSet<T>::GaussianSet(std::size_t count, std::size_t feature_dim_)
    : feature_dim(feature_dim_),
      positions(3 * count, T(0)),
      rotations(4 * count, T(0)),
      log_scales(3 * count, T(0)),
      opacity_logits(count, T(0)),
      color_logits(3 * count, T(0)),
      features(count * feature_dim_, T(0)) {
  for (std::size_t i = 0; i < count; ++i) rotations[4 * i] = T(1);
}

template <typename T>
void GaussianSet<T>::validate() const {
  const std::size_t n = size();
  if (feature_dim == 0) throw Error(Errc::ShapeMismatch, "feature dimension must be >= 1");
  if (positions.size() != 3 * n || rotations.size() != 4 * n || log_scales.size() != 3 * n ||
      color_logits.size() != 3 * n || features.size() != n * feature_dim) {
    throw Error(Errc::ShapeMismatch, "Gaussian parameter arrays disagree on N");
  }
}

template <typename T>
GaussianSet<T> GaussianSet<T>::subset(std::span<const std::size_t> ids) const {
  GaussianSet out(0, feature_dim);
  out.positions.reserve(3 * ids.size());
  out.rotations.reserve(4 * ids.size());
  out.log_scales.reserve(3 * ids.size());
  out.opacity_logits.reserve(ids.size());
  out.color_logits.reserve(3 * ids.size());
  out.features.reserve(feature_dim * ids.size());
  for (std::size_t id : ids) {
    if (id >= size()) throw Error(Errc::InvalidArgument, "subset id out of range");
    out.push_back_from(*this, id);
  }
  return out;
}

template <typename T>
void GaussianSet<T>::push_back_from(const GaussianSet& other, std::size_t i) {
  if (other.feature_dim != feature_dim) {
    throw Error(Errc::DimensionMismatch, "feature dimension differs");
  }
  const auto append = [i](std::vector<T>& dst, const std::vector<T>& src, std::size_t width) {
    dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(i * width),
               src.begin() + static_cast<std::ptrdiff_t>((i + 1) * width));
  };
  append(positions, other.positions, 3);
  append(rotations, other.rotations, 4);
  append(log_scales, other.log_scales, 3);
  append(opacity_logits, other.opacity_logits, 1);
  append(color_logits, other.color_logits, 3);
  append(features, other.features, feature_dim);
}

template <typename T>
Mat3<T> quat_to_rotation(const Vec4<T>& q) {
  const T norm = q.norm();
  if (!(norm > T(1e-12))) throw Error(Errc::ZeroQuaternion, "cannot build a rotation from a zero quaternion");
  const Vec4<T> u = q / norm;
  const T w = u[0], x = u[1], y = u[2], z = u[3];
  Mat3<T> r;
  r << T(1) - T(2) * (y * y + z * z), T(2) * (x * y - w * z), T(2) * (x * z + w * y),
      T(2) * (x * y + w * z), T(1) - T(2) * (x * x + z * z), T(2) * (y * z - w * x),
      T(2) * (x * z - w * y), T(2) * (y * z + w * x), T(1) - T(2) * (x * x + y * y);
  return r;
}

template <typename T>
Mat3<T> covariance3d(const Vec4<T>& q, const Vec3<T>& log_scale) {
  const Mat3<T> r = quat_to_rotation(q);
  const Vec3<T> variance = (T(2) * log_scale.array()).exp().matrix();
  Mat3<T> sigma = r * variance.asDiagonal() * r.transpose();
  // Exact symmetry keeps downstream eigen/inverse code well behaved.
  return T(0.5) * (sigma + sigma.transpose());
}

namespace {

template <typename T>
void fill_defaults(GaussianSet<T>& set, std::span<const double> points, std::uint64_t seed) {
  const std::size_t n = set.size();
  const std::vector<double> dist = mean_knn_distance(points, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = n == 1 ? 0.01 : std::max(dist[i], 1e-7);
    for (int k = 0; k < 3; ++k) set.log_scales[3 * i + k] = static_cast<T>(std::log(d));
    set.opacity_logits[i] = static_cast<T>(logit(kInitialOpacity));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  for (auto& f : set.features) f = static_cast<T>(normal(rng));
}

}  // namespace

template <typename T>
GaussianSet<T> init_from_pointcloud(const PointCloud& cloud, std::size_t feature_dim, std::uint64_t seed) {
  const std::size_t m = cloud.size();
  if (m == 0) throw Error(Errc::EmptyPointCloud, "point cloud has no points");
  if (feature_dim == 0) throw Error(Errc::InvalidArgument, "feature dimension must be >= 1");
  if (cloud.points.size() != 3 * m || (!cloud.colors.empty() && cloud.colors.size() != 3 * m)) {
    throw Error(Errc::ShapeMismatch, "point/color arrays disagree");
  }
  GaussianSet<T> set(m, feature_dim);
  for (std::size_t i = 0; i < 3 * m; ++i) {
    set.positions[i] = static_cast<T>(cloud.points[i]);
    const double c = cloud.colors.empty() ? 0.5 : std::clamp(cloud.colors[i], 1e-3, 1.0 - 1e-3);
    set.color_logits[i] = static_cast<T>(logit(c));
  }
  fill_defaults(set, cloud.points, seed);
  return set;
}

template <typename T>
GaussianSet<T> init_random(std::size_t count, const Box& box, std::size_t feature_dim, std::uint64_t seed) {
  if (count == 0) throw Error(Errc::InvalidArgument, "need at least one Gaussian");
  const Eigen::Vector3d extent = box.max - box.min;
  if (!(extent.minCoeff() > 0.0)) throw Error(Errc::InvalidBox, "box must have positive volume");
  if (feature_dim == 0) throw Error(Errc::InvalidArgument, "feature dimension must be >= 1");

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> points(3 * count);
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < 3; ++k) points[3 * i + k] = box.min[k] + extent[k] * unit(rng);
  }
  GaussianSet<T> set(count, feature_dim);
  for (std::size_t i = 0; i < 3 * count; ++i) set.positions[i] = static_cast<T>(points[i]);
  fill_defaults(set, points, seed);
  return set;
}

#define DGD_INSTANTIATE(T)                                                                     \
  template struct GaussianSet<T>;                                                              \
  template Mat3<T> quat_to_rotation<T>(const Vec4<T>&);                                        \
  template Mat3<T> covariance3d<T>(const Vec4<T>&, const Vec3<T>&);                            \
  template GaussianSet<T> init_from_pointcloud<T>(const PointCloud&, std::size_t, std::uint64_t); \
  template GaussianSet<T> init_random<T>(std::size_t, const Box&, std::size_t, std::uint64_t);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
