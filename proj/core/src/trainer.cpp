#include "dgd/trainer.hpp"

#include <chrono>
#include <cmath>

#include "dgd/error.hpp"

namespace dgd {

void TrainConfig::validate() const {
  if (total_iterations < 1) throw Error(Errc::InvalidArgument, "total_iterations must be >= 1");
  if (warmup_iterations < 0 || warmup_iterations >= total_iterations) {
    throw Error(Errc::InvalidArgument, "warmup_iterations must lie in [0, total_iterations)");
  }
  if (feature_loss_weight < 0.0) throw Error(Errc::InvalidArgument, "feature loss weight must be >= 0");
  if (ast.noise_scale_initial < 0.0 || ast.anneal_end_iteration < 1) {
    throw Error(Errc::InvalidArgument, "invalid AST schedule");
  }
  if (densify.interval < 1) throw Error(Errc::InvalidArgument, "densify interval must be >= 1");
}

template <typename T>
void DensifyStats::add(const SceneGradients<T>& grads, const Camera& camera) {
  const std::size_t n = grads.visible.size();
  if (grad_accum.size() != n) reset(n);
  const double half_w = 0.5 * camera.width;
  const double half_h = 0.5 * camera.height;
  for (std::size_t i = 0; i < n; ++i) {
    if (grads.visible[i] == 0) continue;
    const double gx = static_cast<double>(grads.mean2d[2 * i]) * half_w;
    const double gy = static_cast<double>(grads.mean2d[2 * i + 1]) * half_h;
    grad_accum[i] += std::hypot(gx, gy);
    ++count[i];
  }
}

double scene_extent(std::span<const Frame> frames) {
  if (frames.empty()) return 1.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& f : frames) mean += f.camera.center();
  mean /= static_cast<double>(frames.size());
  double radius = 0.0;
  for (const auto& f : frames) radius = std::max(radius, (f.camera.center() - mean).norm());
  return radius > 1e-6 ? 1.1 * radius : 1.0;
}

namespace {

template <typename T>
Vec3<T> sample_inside(const GaussianSet<T>& scene, std::size_t i, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vec3<T> z(static_cast<T>(normal(rng)), static_cast<T>(normal(rng)), static_cast<T>(normal(rng)));
  const Vec3<T> scale = scene.log_scale(i).array().exp().matrix();
  return scene.position(i) + quat_to_rotation(scene.rotation(i)) * scale.cwiseProduct(z);
}

}  // namespace

template <typename T>
std::vector<long> densify_and_prune(GaussianSet<T>& scene, DensifyStats& stats, const DensifyConfig& config,
                                    double extent, std::mt19937_64& rng) {
  const std::size_t n = scene.size();
  if (stats.grad_accum.size() != n) stats.reset(n);
  const double split_scale = config.percent_dense * extent;
  const T split_shrink = static_cast<T>(std::log(1.6));

  std::vector<char> hot(n, 0);
  std::vector<char> large(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double mean_grad = stats.count[i] > 0 ? stats.grad_accum[i] / static_cast<double>(stats.count[i]) : 0.0;
    hot[i] = mean_grad >= config.grad_threshold ? 1 : 0;
    const double max_scale = std::exp(static_cast<double>(scene.log_scale(i).maxCoeff()));
    large[i] = max_scale > split_scale ? 1 : 0;
  }

  GaussianSet<T> next(0, scene.feature_dim);
  std::vector<long> origin;
  for (std::size_t i = 0; i < n; ++i) {
    if (hot[i] && large[i]) continue;  // replaced by its split children
    next.push_back_from(scene, i);
    origin.push_back(static_cast<long>(i));
  }
  const auto room = [&] { return next.size() < config.max_gaussians; };
  for (std::size_t i = 0; i < n && room(); ++i) {
    if (!hot[i] || large[i]) continue;
    next.push_back_from(scene, i);
    const Vec3<T> p = sample_inside(scene, i, rng);
    const std::size_t k = next.size() - 1;
    for (int d = 0; d < 3; ++d) next.positions[3 * k + d] = p[d];
    origin.push_back(-1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!hot[i] || !large[i]) continue;
    if (!room()) {
      // No room for children: keep the parent rather than dropping it.
      next.push_back_from(scene, i);
      origin.push_back(static_cast<long>(i));
      continue;
    }
    for (int child = 0; child < 2; ++child) {
      next.push_back_from(scene, i);
      const std::size_t k = next.size() - 1;
      const Vec3<T> p = sample_inside(scene, i, rng);
      for (int d = 0; d < 3; ++d) {
        next.positions[3 * k + d] = p[d];
        next.log_scales[3 * k + d] -= split_shrink;
      }
      origin.push_back(-1);
    }
  }

  std::vector<std::size_t> keep;
  std::size_t most_opaque = 0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    if (next.opacity(i) >= static_cast<T>(config.opacity_prune)) keep.push_back(i);
    if (next.opacity_logits[i] > next.opacity_logits[most_opaque]) most_opaque = i;
  }
  if (keep.empty() && !next.empty()) keep.push_back(most_opaque);  // never leave an empty scene
  if (keep.size() != next.size()) {
    std::vector<long> kept_origin;
    kept_origin.reserve(keep.size());
    for (std::size_t i : keep) kept_origin.push_back(origin[i]);
    next = next.subset(keep);
    origin = std::move(kept_origin);
  }
  scene = std::move(next);
  stats.reset(scene.size());
  return origin;
}

template <typename T>
Trainer<T>::Trainer(GaussianSet<T> scene, DeformationField<T> field, TrainConfig config, double extent)
    : scene_(std::move(scene)), field_(std::move(field)), config_(config), extent_(extent), rng_(config.seed) {
  config_.validate();
  scene_.validate();
  field_.validate();
  stats_.reset(scene_.size());
  reset_gaussian_optimizers();
  for (const auto& layer : field_.layers()) {
    field_adam_.emplace_back(static_cast<std::size_t>(layer.weight.size()), config_.adam);
    field_adam_.emplace_back(static_cast<std::size_t>(layer.bias.size()), config_.adam);
  }
}

template <typename T>
void Trainer<T>::reset_gaussian_optimizers() {
  gaussian_adam_.clear();
  for (const auto* v : {&scene_.positions, &scene_.rotations, &scene_.log_scales, &scene_.opacity_logits,
                        &scene_.color_logits, &scene_.features}) {
    gaussian_adam_.emplace_back(v->size(), config_.adam);
  }
}

template <typename T>
void Trainer<T>::remap_gaussian_optimizers(const std::vector<long>& origin) {
  const std::size_t widths[] = {3, 4, 3, 1, 3, scene_.feature_dim};
  for (std::size_t g = 0; g < gaussian_adam_.size(); ++g) {
    const std::size_t w = widths[g];
    AdamState<T> fresh(origin.size() * w, config_.adam);
    fresh.step = gaussian_adam_[g].step;
    for (std::size_t i = 0; i < origin.size(); ++i) {
      if (origin[i] < 0) continue;
      const std::size_t src = static_cast<std::size_t>(origin[i]) * w;
      for (std::size_t k = 0; k < w; ++k) {
        fresh.first_moment[i * w + k] = gaussian_adam_[g].first_moment[src + k];
        fresh.second_moment[i * w + k] = gaussian_adam_[g].second_moment[src + k];
      }
    }
    gaussian_adam_[g] = std::move(fresh);
  }
}

template <typename T>
StepRecord Trainer<T>::step(std::span<const Frame> frames) {
  if (frames.empty()) throw Error(Errc::InvalidArgument, "no training frames");
  std::uniform_int_distribution<std::size_t> pick(0, frames.size() - 1);
  const std::size_t index = pick(rng_);
  const Frame& frame = frames[index];
  const bool active = iteration_ >= config_.warmup_iterations;
  const double interval = 1.0 / static_cast<double>(frames.size());
  const double t = active ? ast_time(frame.time, iteration_, config_.ast, rng_, interval) : frame.time;

  const Evaluation<T> ev =
      evaluate(scene_, active ? &field_ : nullptr, frame, t, config_.feature_loss_weight, config_.render);

  StepRecord rec;
  rec.iteration = iteration_;
  rec.loss = static_cast<double>(ev.loss.loss);
  rec.color_loss = static_cast<double>(ev.loss.color_term);
  rec.feature_loss = static_cast<double>(ev.loss.feature_term);
  rec.frame = index;
  rec.time = t;
  rec.deformation_active = active;
  rec.position_lr = exp_lr({config_.lr.position_start, config_.lr.position_end, config_.total_iterations}, iteration_);
  rec.deformation_lr = exp_lr(config_.deformation_lr, std::max(0L, iteration_ - config_.warmup_iterations));

  const GaussianSet<T>& g = ev.grads.params;
  const double rates[] = {rec.position_lr, config_.lr.rotation, config_.lr.scale,
                          config_.lr.opacity, config_.lr.color, config_.lr.feature};
  std::vector<T>* params[] = {&scene_.positions, &scene_.rotations, &scene_.log_scales,
                              &scene_.opacity_logits, &scene_.color_logits, &scene_.features};
  const std::vector<T>* grads[] = {&g.positions, &g.rotations, &g.log_scales,
                                   &g.opacity_logits, &g.color_logits, &g.features};
  for (std::size_t k = 0; k < 6; ++k) adam_step<T>(gaussian_adam_[k], *params[k], *grads[k], rates[k]);

  if (active) {
    auto& layers = field_.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto& gw = ev.grads.field[l];
      adam_step<T>(field_adam_[2 * l], std::span<T>(layers[l].weight.data(), layers[l].weight.size()),
                   std::span<const T>(gw.weight.data(), gw.weight.size()), rec.deformation_lr);
      adam_step<T>(field_adam_[2 * l + 1], std::span<T>(layers[l].bias.data(), layers[l].bias.size()),
                   std::span<const T>(gw.bias.data(), gw.bias.size()), rec.deformation_lr);
    }
  }

  const auto& dc = config_.densify;
  const auto stop = static_cast<long>(dc.stop_fraction * static_cast<double>(config_.total_iterations));
  if (dc.enabled && iteration_ < stop) {
    stats_.add(ev.grads, frame.camera);
    if (iteration_ >= dc.start_iteration && iteration_ > 0 && iteration_ % dc.interval == 0) {
      const auto start = std::chrono::steady_clock::now();
      const std::vector<long> origin = densify_and_prune(scene_, stats_, dc, extent_, rng_);
      remap_gaussian_optimizers(origin);
      report_.densify_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  }

  rec.gaussians = scene_.size();
  ++iteration_;
  report_.steps.push_back(rec);
  report_.final_gaussians = scene_.size();
  return rec;
}

template <typename T>
TrainReport Trainer<T>::run(std::span<const Frame> frames, const std::function<void(const StepRecord&)>& on_step,
                            const std::function<void(const Trainer&)>& on_snapshot) {
  while (iteration_ < config_.total_iterations) {
    const bool warm = iteration_ < config_.warmup_iterations;
    const auto start = std::chrono::steady_clock::now();
    const StepRecord rec = step(frames);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    (warm ? report_.warmup_seconds : report_.joint_seconds) += seconds;
    if (on_step) on_step(rec);
    if (on_snapshot && config_.snapshot_every > 0 && iteration_ % config_.snapshot_every == 0) on_snapshot(*this);
  }
  return report_;
}

#define DGD_INSTANTIATE(T)                                                                           \
  template void DensifyStats::add<T>(const SceneGradients<T>&, const Camera&);                       \
  template std::vector<long> densify_and_prune<T>(GaussianSet<T>&, DensifyStats&, const DensifyConfig&, \
                                                  double, std::mt19937_64&);                         \
  template class Trainer<T>;

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
