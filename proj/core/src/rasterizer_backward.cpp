#include <array>

#include "dgd/error.hpp"
#include "dgd/parallel.hpp"
#include "dgd/rasterizer.hpp"
#include "raster_internal.hpp"

namespace dgd {

namespace {

// Per-splat image-space gradients gathered while walking pixels.
template <typename T>
struct SplatGrads {
  std::size_t feature_dim = 0;
  std::vector<T> mean;     // S x 2
  std::vector<T> conic;    // S x 3: (a, b, c) of 0.5 a dx^2 + b dx dy + 0.5 c dy^2
  std::vector<T> opacity;  // S
  std::vector<T> color;    // S x 3, w.r.t. activated color
  std::vector<T> feature;  // S x C

  SplatGrads(std::size_t splats, std::size_t c)
      : feature_dim(c), mean(2 * splats), conic(3 * splats), opacity(splats), color(3 * splats),
        feature(splats * c) {}

  void add(const SplatGrads& o) {
    const auto acc = [](std::vector<T>& a, const std::vector<T>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    acc(mean, o.mean);
    acc(conic, o.conic);
    acc(opacity, o.opacity);
    acc(color, o.color);
    acc(feature, o.feature);
  }
};

// d R(q) / d q_k for a unit quaternion (w, x, y, z).
template <typename T>
std::array<Mat3<T>, 4> rotation_jacobian(const Vec4<T>& u) {
  const T w = u[0], x = u[1], y = u[2], z = u[3];
  std::array<Mat3<T>, 4> d;
  d[0] << T(0), -z, y, z, T(0), -x, -y, x, T(0);
  d[1] << T(0), y, z, y, T(-2) * x, -w, z, w, T(-2) * x;
  d[2] << T(-2) * y, x, w, x, T(0), z, -w, z, T(-2) * y;
  d[3] << T(-2) * z, -w, x, w, T(-2) * z, y, x, y, T(0);
  for (auto& m : d) m *= T(2);
  return d;
}

}  // namespace

template <typename T>
RenderGradients<T> render_backward(const GaussianSet<T>& gaussians, const Camera& camera,
                                   std::span<const T> grad_color, std::span<const T> grad_feature,
                                   std::span<const T> grad_alpha, const RenderOptions& options) {
  camera.validate();
  const std::size_t n = gaussians.size();
  const std::size_t c_dim = gaussians.feature_dim;
  const std::size_t pixels = camera.pixel_count();
  if (n > 0) gaussians.validate();
  if (grad_color.size() != 3 * pixels || (!grad_feature.empty() && grad_feature.size() != pixels * c_dim) ||
      (!grad_alpha.empty() && grad_alpha.size() != pixels)) {
    throw Error(Errc::ShapeMismatch, "image gradient buffers do not match the camera / feature dimension");
  }

  RenderGradients<T> result;
  result.params = GaussianSet<T>(n, c_dim);
  std::fill(result.params.rotations.begin(), result.params.rotations.end(), T(0));
  result.mean2d.assign(2 * n, T(0));
  result.visible.assign(n, 0);
  if (n == 0) return result;

  const auto splats = detail::project_scene(gaussians, camera, true);
  const detail::TileBins bins = detail::bin_splats(splats, camera, options.tile_size);
  std::vector<T> colors(gaussians.color_logits.size());
  for (std::size_t i = 0; i < colors.size(); ++i) colors[i] = sigmoid(gaussians.color_logits[i]);
  const Vec3<T> bg = options.background.cast<T>();
  const std::size_t tiles = static_cast<std::size_t>(bins.tiles_x) * static_cast<std::size_t>(bins.tiles_y);
  const std::size_t threads = options.threads == 0 ? default_thread_count() : options.threads;
  const std::size_t chunks = chunk_count(tiles, threads);

  std::vector<SplatGrads<T>> partial;
  partial.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) partial.emplace_back(splats.size(), c_dim);

  parallel_chunks(tiles, threads, [&](std::size_t begin, std::size_t end, std::size_t chunk) {
    SplatGrads<T>& g = partial[chunk];
    std::vector<detail::Fragment<T>> frags;
    std::vector<T> sum_feature(c_dim);
    for (std::size_t tile = begin; tile < end; ++tile) {
      const int tx = static_cast<int>(tile) % bins.tiles_x;
      const int ty = static_cast<int>(tile) / bins.tiles_x;
      const std::uint32_t* list = bins.items.data() + bins.start[tile];
      const std::size_t count = bins.start[tile + 1] - bins.start[tile];
      const int x_end = std::min(camera.width, (tx + 1) * bins.tile_size);
      const int y_end = std::min(camera.height, (ty + 1) * bins.tile_size);
      for (int y = ty * bins.tile_size; y < y_end; ++y) {
        for (int x = tx * bins.tile_size; x < x_end; ++x) {
          const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(camera.width) +
                                  static_cast<std::size_t>(x);
          frags.clear();
          const T final_t = detail::composite_pixel(static_cast<T>(x), static_cast<T>(y), splats, list, count,
                                                    [&](const detail::Fragment<T>& f) { frags.push_back(f); });
          if (frags.empty()) continue;
          const T* gc = &grad_color[3 * pix];
          const T* gf = grad_feature.empty() ? nullptr : &grad_feature[pix * c_dim];
          const T ga = grad_alpha.empty() ? T(0) : grad_alpha[pix];

          // Running sums over the splats behind the current one (plus background).
          Vec3<T> sum_color = final_t * bg;
          std::fill(sum_feature.begin(), sum_feature.end(), T(0));
          for (std::size_t k = frags.size(); k-- > 0;) {
            const detail::Fragment<T>& f = frags[k];
            const Splat2D<T>& s = splats[f.splat];
            const std::size_t id = s.gaussian_id;
            const T weight = f.transmittance * f.alpha;
            const T* ci = &colors[3 * id];
            const T* fi = gaussians.features.data() + id * c_dim;

            T own = T(0);
            T behind = T(0);
            for (int c = 0; c < 3; ++c) {
              g.color[3 * f.splat + c] += weight * gc[c];
              own += gc[c] * ci[c];
              behind += gc[c] * sum_color[c];
            }
            if (gf != nullptr) {
              for (std::size_t c = 0; c < c_dim; ++c) {
                g.feature[f.splat * c_dim + c] += weight * gf[c];
                own += gf[c] * fi[c];
                behind += gf[c] * sum_feature[c];
              }
            }
            const T inv_one_minus = T(1) / (T(1) - f.alpha);
            const T d_alpha = f.transmittance * own - behind * inv_one_minus + ga * final_t * inv_one_minus;

            for (int c = 0; c < 3; ++c) sum_color[c] += weight * ci[c];
            for (std::size_t c = 0; c < c_dim; ++c) sum_feature[c] += weight * fi[c];

            if (f.clamped) continue;
            g.opacity[f.splat] += d_alpha * f.falloff;
            const T d_power = -d_alpha * f.alpha;
            const T dx = static_cast<T>(x) - s.mean.x();
            const T dy = static_cast<T>(y) - s.mean.y();
            g.mean[2 * f.splat] -= d_power * (s.conic(0, 0) * dx + s.conic(0, 1) * dy);
            g.mean[2 * f.splat + 1] -= d_power * (s.conic(0, 1) * dx + s.conic(1, 1) * dy);
            g.conic[3 * f.splat] += T(0.5) * dx * dx * d_power;
            g.conic[3 * f.splat + 1] += dx * dy * d_power;
            g.conic[3 * f.splat + 2] += T(0.5) * dy * dy * d_power;
          }
        }
      }
    }
  });
  for (std::size_t c = 1; c < chunks; ++c) partial[0].add(partial[c]);
  const SplatGrads<T>& g = partial[0];  // tiles >= 1, so there is always one chunk

  const Mat3<T> w = camera.rotation.cast<T>();
  const T fx = static_cast<T>(camera.fx);
  const T fy = static_cast<T>(camera.fy);
  GaussianSet<T>& out = result.params;
  for (std::size_t s = 0; s < splats.size(); ++s) {
    const Splat2D<T>& sp = splats[s];
    const std::size_t id = sp.gaussian_id;
    result.visible[id] = 1;
    result.mean2d[2 * id] = g.mean[2 * s];
    result.mean2d[2 * id + 1] = g.mean[2 * s + 1];

    const T o = sp.opacity;
    out.opacity_logits[id] = g.opacity[s] * o * (T(1) - o);
    for (int c = 0; c < 3; ++c) {
      const T col = sigmoid(gaussians.color_logits[3 * id + c]);
      out.color_logits[3 * id + c] = g.color[3 * s + c] * col * (T(1) - col);
    }
    for (std::size_t c = 0; c < c_dim; ++c) out.features[id * c_dim + c] = g.feature[s * c_dim + c];

    // conic -> 2D covariance -> camera covariance -> world covariance.
    Mat2<T> g_conic;
    g_conic << g.conic[3 * s], T(0.5) * g.conic[3 * s + 1], T(0.5) * g.conic[3 * s + 1], g.conic[3 * s + 2];
    const Mat2<T> g_cov2d = -sp.conic * g_conic * sp.conic;

    const Vec4<T> q = gaussians.rotation(id);
    const T q_norm = q.norm();
    const Vec4<T> u = q / q_norm;
    const Mat3<T> r = quat_to_rotation(q);
    const Vec3<T> scale = gaussians.log_scale(id).array().exp().matrix();
    const Vec3<T> variance = scale.cwiseProduct(scale);
    const Mat3<T> sigma = r * variance.asDiagonal() * r.transpose();
    const Mat3<T> view_cov = w * sigma * w.transpose();

    const Vec3<T> p = w * gaussians.position(id) + camera.translation.cast<T>();
    const T iz = T(1) / p.z();
    const T iz2 = iz * iz;
    Mat23<T> j;
    j << fx * iz, T(0), -fx * p.x() * iz2, T(0), fy * iz, -fy * p.y() * iz2;

    const Mat23<T> g_j = T(2) * g_cov2d * j * view_cov;
    const Mat3<T> g_view_cov = j.transpose() * g_cov2d * j;
    const Mat3<T> g_sigma = w.transpose() * g_view_cov * w;

    Vec3<T> g_p;
    const T gmx = g.mean[2 * s];
    const T gmy = g.mean[2 * s + 1];
    g_p.x() = gmx * fx * iz - fx * iz2 * g_j(0, 2);
    g_p.y() = gmy * fy * iz - fy * iz2 * g_j(1, 2);
    g_p.z() = -(gmx * fx * p.x() + gmy * fy * p.y()) * iz2 - fx * iz2 * g_j(0, 0) +
              T(2) * fx * p.x() * iz2 * iz * g_j(0, 2) - fy * iz2 * g_j(1, 1) +
              T(2) * fy * p.y() * iz2 * iz * g_j(1, 2);
    const Vec3<T> g_pos = w.transpose() * g_p;
    for (int k = 0; k < 3; ++k) out.positions[3 * id + k] = g_pos[k];

    const Mat3<T> rt_g_r = r.transpose() * g_sigma * r;
    for (int k = 0; k < 3; ++k) out.log_scales[3 * id + k] = T(2) * variance[k] * rt_g_r(k, k);

    const Mat3<T> g_r = T(2) * g_sigma * r * variance.asDiagonal();
    const auto d_r = rotation_jacobian(u);
    Vec4<T> g_u;
    for (int k = 0; k < 4; ++k) g_u[k] = g_r.cwiseProduct(d_r[k]).sum();
    const Vec4<T> g_q = (g_u - u * u.dot(g_u)) / q_norm;
    for (int k = 0; k < 4; ++k) out.rotations[4 * id + k] = g_q[k];
  }
  return result;
}

#define DGD_INSTANTIATE(T)                                                                                    \
  template RenderGradients<T> render_backward<T>(const GaussianSet<T>&, const Camera&, std::span<const T>, \
                                                 std::span<const T>, std::span<const T>, const RenderOptions&);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
