#include "dgd/rasterizer.hpp"

#include <Eigen/LU>
#include <numeric>

#include "dgd/error.hpp"
#include "dgd/parallel.hpp"
#include "raster_internal.hpp"

namespace dgd {

template <typename T>
std::optional<Splat2D<T>> project_gaussian(const Vec3<T>& position, const Mat3<T>& covariance, const Camera& camera,
                                           bool cull_to_image) {
  Splat2D<T> s;
  switch (detail::project_splat(position, covariance, camera, cull_to_image, s)) {
    case detail::ProjectStatus::Culled: return std::nullopt;
    case detail::ProjectStatus::Singular: throw Error(Errc::SingularCovariance, "projected covariance is singular");
    case detail::ProjectStatus::Ok: break;
  }
  return s;
}

namespace {

template <typename T>
RenderOutput<T> blank_output(const GaussianSet<T>& gaussians, const Camera& camera) {
  RenderOutput<T> out;
  out.width = camera.width;
  out.height = camera.height;
  out.feature_dim = gaussians.feature_dim;
  const std::size_t pixels = camera.pixel_count();
  out.color.assign(3 * pixels, T(0));
  out.feature.assign(pixels * gaussians.feature_dim, T(0));
  out.alpha.assign(pixels, T(0));
  return out;
}

template <typename T>
std::vector<T> activated_colors(const GaussianSet<T>& gaussians) {
  std::vector<T> colors(gaussians.color_logits.size());
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = sigmoid(gaussians.color_logits[i]);
  return colors;
}

template <typename T>
void keep_top_k(std::vector<Contribution<T>>& list, std::size_t k) {
  // stable: equal weights keep compositing order
  std::stable_sort(list.begin(), list.end(),
                   [](const Contribution<T>& a, const Contribution<T>& b) { return a.weight > b.weight; });
  if (list.size() > k) list.resize(k);
}

}  // namespace

template <typename T>
RenderOutput<T> render(const GaussianSet<T>& gaussians, const Camera& camera, const RenderOptions& options) {
  camera.validate();
  if (!gaussians.empty()) gaussians.validate();
  RenderOutput<T> out = blank_output(gaussians, camera);
  const std::size_t c_dim = gaussians.feature_dim;
  if (options.record_contributions) out.contributions.resize(camera.pixel_count());

  const auto splats = detail::project_scene(gaussians, camera, true);
  const detail::TileBins bins = detail::bin_splats(splats, camera, options.tile_size);
  const std::vector<T> colors = activated_colors(gaussians);
  const Vec3<T> bg = options.background.cast<T>();
  const std::size_t tiles = static_cast<std::size_t>(bins.tiles_x) * static_cast<std::size_t>(bins.tiles_y);
  const std::size_t threads = options.threads == 0 ? default_thread_count() : options.threads;

  parallel_chunks(tiles, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    std::vector<Contribution<T>> record;
    for (std::size_t tile = begin; tile < end; ++tile) {
      const int tx = static_cast<int>(tile) % bins.tiles_x;
      const int ty = static_cast<int>(tile) / bins.tiles_x;
      const std::uint32_t* list = bins.items.data() + bins.start[tile];
      const std::size_t count = bins.start[tile + 1] - bins.start[tile];
      const int x_end = std::min(camera.width, (tx + 1) * bins.tile_size);
      const int y_end = std::min(camera.height, (ty + 1) * bins.tile_size);
      for (int y = ty * bins.tile_size; y < y_end; ++y) {
        for (int x = tx * bins.tile_size; x < x_end; ++x) {
          const std::size_t pix = out.pixel(x, y);
          T* color = &out.color[3 * pix];
          T* feature = out.feature.data() + pix * c_dim;
          record.clear();
          const T final_t = detail::composite_pixel(
              static_cast<T>(x), static_cast<T>(y), splats, list, count, [&](const detail::Fragment<T>& f) {
                const std::size_t id = splats[f.splat].gaussian_id;
                const T w = f.transmittance * f.alpha;
                for (int c = 0; c < 3; ++c) color[c] += w * colors[3 * id + c];
                const T* fi = gaussians.features.data() + id * c_dim;
                for (std::size_t c = 0; c < c_dim; ++c) feature[c] += w * fi[c];
                if (options.record_contributions) record.push_back({id, w});
              });
          for (int c = 0; c < 3; ++c) color[c] += final_t * bg[c];
          out.alpha[pix] = T(1) - final_t;
          if (options.record_contributions) {
            keep_top_k(record, options.top_k);
            out.contributions[pix] = record;
          }
        }
      }
    }
  });
  return out;
}

template <typename T>
RenderOutput<T> render_brute_force(const GaussianSet<T>& gaussians, const Camera& camera,
                                   const RenderOptions& options) {
  camera.validate();
  if (!gaussians.empty()) gaussians.validate();
  RenderOutput<T> out = blank_output(gaussians, camera);
  if (options.record_contributions) out.contributions.resize(camera.pixel_count());
  const std::size_t c_dim = gaussians.feature_dim;

  // Only near-plane culling; the image-bounds test is skipped on purpose.
  const auto splats = detail::project_scene(gaussians, camera, false);

  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const std::size_t pix = out.pixel(x, y);
      T trans = T(1);
      std::vector<Contribution<T>> record;
      for (const Splat2D<T>& s : splats) {
        const Vec2<T> d(static_cast<T>(x) - s.mean.x(), static_cast<T>(y) - s.mean.y());
        const T mahalanobis = d.dot(s.cov.inverse() * d);
        if (mahalanobis > static_cast<T>(raster::kRadiusSigmas * raster::kRadiusSigmas)) continue;
        T alpha = s.opacity * std::exp(T(-0.5) * mahalanobis);
        alpha = std::min(alpha, static_cast<T>(raster::kMaxAlpha));
        if (alpha < static_cast<T>(raster::kMinAlpha)) continue;
        if (trans * (T(1) - alpha) < static_cast<T>(raster::kMinTransmittance)) break;
        const T weight = trans * alpha;
        const Vec3<T> c = gaussians.color(s.gaussian_id);
        for (int k = 0; k < 3; ++k) out.color[3 * pix + k] += weight * c[k];
        const auto f = gaussians.feature(s.gaussian_id);
        for (std::size_t k = 0; k < c_dim; ++k) out.feature[pix * c_dim + k] += weight * f[k];
        if (options.record_contributions) record.push_back({s.gaussian_id, weight});
        trans *= T(1) - alpha;
      }
      for (int k = 0; k < 3; ++k) out.color[3 * pix + k] += trans * static_cast<T>(options.background[k]);
      out.alpha[pix] = T(1) - trans;
      if (options.record_contributions) {
        keep_top_k(record, options.top_k);
        out.contributions[pix] = std::move(record);
      }
    }
  }
  return out;
}

template <typename T>
std::vector<Contribution<T>> contribution_weights(const GaussianSet<T>& gaussians, const Camera& camera, int x,
                                                  int y) {
  camera.validate();
  if (x < 0 || y < 0 || x >= camera.width || y >= camera.height) {
    throw Error(Errc::PixelOutOfBounds,
                "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") outside the image");
  }
  if (gaussians.empty()) return {};
  gaussians.validate();
  const auto splats = detail::project_scene(gaussians, camera, true);
  std::vector<std::uint32_t> order(splats.size());
  std::iota(order.begin(), order.end(), 0U);
  std::vector<Contribution<T>> list;
  detail::composite_pixel(static_cast<T>(x), static_cast<T>(y), splats, order.data(), order.size(),
                          [&](const detail::Fragment<T>& f) {
                            list.push_back({splats[f.splat].gaussian_id, f.transmittance * f.alpha});
                          });
  keep_top_k(list, list.size());
  return list;
}

#define DGD_INSTANTIATE(T)                                                                                  \
  template std::optional<Splat2D<T>> project_gaussian<T>(const Vec3<T>&, const Mat3<T>&, const Camera&, bool); \
  template RenderOutput<T> render<T>(const GaussianSet<T>&, const Camera&, const RenderOptions&);           \
  template RenderOutput<T> render_brute_force<T>(const GaussianSet<T>&, const Camera&, const RenderOptions&); \
  template std::vector<Contribution<T>> contribution_weights<T>(const GaussianSet<T>&, const Camera&, int, int);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
