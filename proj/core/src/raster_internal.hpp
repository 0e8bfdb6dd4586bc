#pragma once

// Pieces shared by the forward renderer, the backward pass and contribution
// queries. Not installed.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "dgd/rasterizer.hpp"

namespace dgd::detail {

enum class ProjectStatus { Ok, Culled, Singular };

template <typename T>
ProjectStatus project_splat(const Vec3<T>& position, const Mat3<T>& covariance, const Camera& camera,
                            bool cull_to_image, Splat2D<T>& out) {
  const Mat3<T> w = camera.rotation.cast<T>();
  const Vec3<T> p = w * position + camera.translation.cast<T>();
  if (!(p.z() > static_cast<T>(camera.near_clip))) return ProjectStatus::Culled;

  const T fx = static_cast<T>(camera.fx);
  const T fy = static_cast<T>(camera.fy);
  const T inv_z = T(1) / p.z();
  Mat23<T> j;
  j << fx * inv_z, T(0), -fx * p.x() * inv_z * inv_z,
       T(0), fy * inv_z, -fy * p.y() * inv_z * inv_z;
  Mat2<T> cov = j * (w * covariance * w.transpose()) * j.transpose();
  cov(0, 1) = cov(1, 0) = T(0.5) * (cov(0, 1) + cov(1, 0));
  cov(0, 0) += static_cast<T>(raster::kLowPassDilation);
  cov(1, 1) += static_cast<T>(raster::kLowPassDilation);
  const T det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  if (!(det > T(1e-12))) return ProjectStatus::Singular;

  out.mean = {fx * p.x() * inv_z + static_cast<T>(camera.cx), fy * p.y() * inv_z + static_cast<T>(camera.cy)};
  out.cov = cov;
  out.conic << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;
  out.depth = p.z();
  const T mid = T(0.5) * (cov(0, 0) + cov(1, 1));
  const T lambda_max = mid + std::sqrt(std::max(T(0), mid * mid - det));
  out.radius = static_cast<T>(raster::kRadiusSigmas) * std::sqrt(lambda_max);

  if (cull_to_image) {
    const T r = out.radius;
    if (out.mean.x() + r < T(0) || out.mean.x() - r > static_cast<T>(camera.width - 1) ||
        out.mean.y() + r < T(0) || out.mean.y() - r > static_cast<T>(camera.height - 1)) {
      return ProjectStatus::Culled;
    }
  }
  return ProjectStatus::Ok;
}

/// Projects every Gaussian and sorts the survivors by (depth, id). Gaussians
/// with a degenerate quaternion or covariance are dropped.
template <typename T>
std::vector<Splat2D<T>> project_scene(const GaussianSet<T>& gaussians, const Camera& camera, bool cull_to_image) {
  std::vector<Splat2D<T>> splats;
  splats.reserve(gaussians.size());
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const Vec4<T> q = gaussians.rotation(i);
    if (!(q.norm() > T(1e-12))) continue;
    Splat2D<T> s;
    if (project_splat(gaussians.position(i), covariance3d(q, gaussians.log_scale(i)), camera, cull_to_image, s) !=
        ProjectStatus::Ok) {
      continue;
    }
    s.opacity = gaussians.opacity(i);
    s.gaussian_id = i;
    splats.push_back(s);
  }
  std::stable_sort(splats.begin(), splats.end(), [](const Splat2D<T>& a, const Splat2D<T>& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.gaussian_id < b.gaussian_id;
  });
  return splats;
}

/// Per-tile lists of splat indices, each list in global depth order.
struct TileBins {
  int tile_size = 16;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::size_t> start;  // tiles_x * tiles_y + 1
  std::vector<std::uint32_t> items;
};

template <typename T>
TileBins bin_splats(const std::vector<Splat2D<T>>& splats, const Camera& camera, int tile_size) {
  TileBins bins;
  bins.tile_size = std::max(1, tile_size);
  bins.tiles_x = (camera.width + bins.tile_size - 1) / bins.tile_size;
  bins.tiles_y = (camera.height + bins.tile_size - 1) / bins.tile_size;
  const std::size_t tiles = static_cast<std::size_t>(bins.tiles_x) * static_cast<std::size_t>(bins.tiles_y);

  struct Rect { int x0, x1, y0, y1; };
  std::vector<Rect> rects(splats.size());
  bins.start.assign(tiles + 1, 0);
  for (std::size_t s = 0; s < splats.size(); ++s) {
    const auto& sp = splats[s];
    // Pixels at integer coordinates within the radius disc's bounding square.
    const int px0 = std::max(0, static_cast<int>(std::ceil(sp.mean.x() - sp.radius)));
    const int px1 = std::min(camera.width - 1, static_cast<int>(std::floor(sp.mean.x() + sp.radius)));
    const int py0 = std::max(0, static_cast<int>(std::ceil(sp.mean.y() - sp.radius)));
    const int py1 = std::min(camera.height - 1, static_cast<int>(std::floor(sp.mean.y() + sp.radius)));
    Rect r{0, -1, 0, -1};
    if (px0 <= px1 && py0 <= py1) {
      r = {px0 / bins.tile_size, px1 / bins.tile_size, py0 / bins.tile_size, py1 / bins.tile_size};
    }
    rects[s] = r;
    for (int ty = r.y0; ty <= r.y1; ++ty) {
      for (int tx = r.x0; tx <= r.x1; ++tx) ++bins.start[static_cast<std::size_t>(ty * bins.tiles_x + tx) + 1];
    }
  }
  for (std::size_t t = 0; t < tiles; ++t) bins.start[t + 1] += bins.start[t];
  bins.items.resize(bins.start[tiles]);
  std::vector<std::size_t> cursor(bins.start.begin(), bins.start.end() - 1);
  for (std::size_t s = 0; s < splats.size(); ++s) {
    const Rect& r = rects[s];
    for (int ty = r.y0; ty <= r.y1; ++ty) {
      for (int tx = r.x0; tx <= r.x1; ++tx) {
        bins.items[cursor[static_cast<std::size_t>(ty * bins.tiles_x + tx)]++] = static_cast<std::uint32_t>(s);
      }
    }
  }
  return bins;
}

template <typename T>
struct Fragment {
  std::uint32_t splat = 0;
  T alpha = T(0);
  T falloff = T(0);      // exp(-power)
  T transmittance = T(0);  // T_i before this splat
  bool clamped = false;  // alpha hit kMaxAlpha
};

/// Front-to-back walk over `list` at pixel (px, py). Calls visit(fragment) for
/// every composited splat and returns the final transmittance.
template <typename T, typename Visit>
T composite_pixel(T px, T py, const std::vector<Splat2D<T>>& splats, const std::uint32_t* list, std::size_t count,
                  Visit&& visit) {
  constexpr T max_power = static_cast<T>(raster::kMaxPower);
  constexpr T max_alpha = static_cast<T>(raster::kMaxAlpha);
  constexpr T min_alpha = static_cast<T>(raster::kMinAlpha);
  constexpr T min_trans = static_cast<T>(raster::kMinTransmittance);
  T trans = T(1);
  for (std::size_t k = 0; k < count; ++k) {
    const Splat2D<T>& s = splats[list[k]];
    const T dx = px - s.mean.x();
    const T dy = py - s.mean.y();
    const T power = T(0.5) * (s.conic(0, 0) * dx * dx + s.conic(1, 1) * dy * dy) + s.conic(0, 1) * dx * dy;
    if (power > max_power) continue;
    const T falloff = std::exp(-power);
    const T raw = s.opacity * falloff;
    const bool clamped = raw > max_alpha;
    const T alpha = clamped ? max_alpha : raw;
    if (alpha < min_alpha) continue;
    const T next = trans * (T(1) - alpha);
    if (next < min_trans) break;
    visit(Fragment<T>{list[k], alpha, falloff, trans, clamped});
    trans = next;
  }
  return trans;
}

}  // namespace dgd::detail
