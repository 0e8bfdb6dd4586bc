#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dgd/camera.hpp"
#include "dgd/gaussians.hpp"
#include "dgd/math.hpp"

namespace dgd {

/// Compositing conventions shared by the tiled renderer, the brute-force
/// oracle, the backward pass and the contribution queries.
namespace raster {
inline constexpr double kLowPassDilation = 0.3;   // px^2 added to the 2D covariance
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kRadiusSigmas = 3.0;
/// 0.5 * kRadiusSigmas^2: a splat never reaches past its 3-sigma ellipse.
inline constexpr double kMaxPower = 0.5 * kRadiusSigmas * kRadiusSigmas;
}  // namespace raster

struct RenderOptions {
  Eigen::Vector3d background = Eigen::Vector3d::Zero();
  bool record_contributions = false;
  std::size_t top_k = 8;
  int tile_size = 16;
  std::size_t threads = 0;  // 0: default_thread_count(); 1: strict sequential
};

/// A Gaussian projected to the image plane.
template <typename T>
struct Splat2D {
  Vec2<T> mean;       // pixels
  Mat2<T> cov;        // includes the low-pass dilation
  Mat2<T> conic;      // cov^-1
  T depth = T(0);     // camera-space z
  T radius = T(0);    // 3 * sqrt(max eigenvalue of cov), pixels
  T opacity = T(0);   // activated
  std::size_t gaussian_id = 0;
};

/// Projects one Gaussian. Returns std::nullopt when culled: behind the near
/// plane, or (with `cull_to_image`) when the splat cannot reach any pixel.
/// Throws SingularCovariance if det(cov2d) <= 1e-12 after dilation.
template <typename T>
[[nodiscard]] std::optional<Splat2D<T>> project_gaussian(const Vec3<T>& position, const Mat3<T>& covariance,
                                                         const Camera& camera, bool cull_to_image = true);

template <typename T>
struct Contribution {
  std::size_t gaussian_id = 0;
  T weight = T(0);  // T_i * alpha_i
};

template <typename T>
struct RenderOutput {
  int width = 0;
  int height = 0;
  std::size_t feature_dim = 0;
  std::vector<T> color;    // H x W x 3
  std::vector<T> feature;  // H x W x C
  std::vector<T> alpha;    // H x W, sum of T_i * alpha_i
  /// Per pixel, top-K (descending weight) when RenderOptions::record_contributions.
  std::vector<std::vector<Contribution<T>>> contributions;

  [[nodiscard]] std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
};

/// Tiled front-to-back compositing after a global (depth, id) sort.
template <typename T>
[[nodiscard]] RenderOutput<T> render(const GaussianSet<T>& gaussians, const Camera& camera,
                                     const RenderOptions& options = {});

/// Reference renderer: every pixel walks the whole depth-sorted list.
template <typename T>
[[nodiscard]] RenderOutput<T> render_brute_force(const GaussianSet<T>& gaussians, const Camera& camera,
                                                 const RenderOptions& options = {});

template <typename T>
struct RenderGradients {
  GaussianSet<T> params;      // dL/d every stored parameter, same layout as the scene
  std::vector<T> mean2d;      // N x 2, dL/d(projected mean) in pixels
  std::vector<unsigned char> visible;  // 1 when the Gaussian was projected
};

/// Gradients of the loss whose image-space gradients are given. An empty
/// `grad_feature` or `grad_alpha` span means zero.
template <typename T>
[[nodiscard]] RenderGradients<T> render_backward(const GaussianSet<T>& gaussians, const Camera& camera,
                                                 std::span<const T> grad_color, std::span<const T> grad_feature,
                                                 std::span<const T> grad_alpha, const RenderOptions& options = {});

/// Every Gaussian composited at `pixel`, with weight T_i * alpha_i, in
/// descending weight order (ties keep compositing order).
/// Throws PixelOutOfBounds.
template <typename T>
[[nodiscard]] std::vector<Contribution<T>> contribution_weights(const GaussianSet<T>& gaussians, const Camera& camera,
                                                                int x, int y);

}  // namespace dgd
