#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgd/deformation.hpp"
#include "dgd/frame.hpp"
#include "dgd/gaussians.hpp"
#include "dgd/loss.hpp"
#include "dgd/optimizer.hpp"
#include "dgd/rasterizer.hpp"

namespace dgd {

/// Per-group Adam learning rates for the Gaussian parameters. Positions decay
/// exponentially over the run; the others are constant.
struct GroupLearningRates {
  double position_start = 1.6e-4;
  double position_end = 1.6e-6;
  double rotation = 1e-3;
  double scale = 5e-3;
  double opacity = 5e-2;
  double color = 2.5e-3;
  double feature = 2.5e-3;
};

struct DensifyConfig {
  bool enabled = true;
  long interval = 100;
  double grad_threshold = 2e-4;   // mean NDC-space gradient norm of the projected mean
  double opacity_prune = 0.005;
  long start_iteration = 500;
  double stop_fraction = 0.5;     // of total_iterations
  double percent_dense = 0.01;    // clone/split boundary, fraction of scene extent
  std::size_t max_gaussians = 1'000'000;
};

struct TrainConfig {
  long total_iterations = 40000;
  long warmup_iterations = 3000;
  double feature_loss_weight = 1.0;
  // Stepped from the end of warmup, since the field is frozen before it.
  LrSchedule deformation_lr{8e-4, 1.6e-6, 37000};
  AstConfig ast;
  DensifyConfig densify;
  GroupLearningRates lr;
  AdamConfig adam;
  std::uint64_t seed = 0;
  long snapshot_every = 0;
  RenderOptions render;

  /// Throws InvalidArgument unless warmup < total and lambda_f >= 0.
  void validate() const;
};

struct StepRecord {
  long iteration = 0;
  double loss = 0.0;
  double color_loss = 0.0;
  double feature_loss = 0.0;
  std::size_t gaussians = 0;
  double deformation_lr = 0.0;
  double position_lr = 0.0;
  std::size_t frame = 0;
  double time = 0.0;
  bool deformation_active = false;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  double warmup_seconds = 0.0;
  double joint_seconds = 0.0;
  double densify_seconds = 0.0;
  std::size_t final_gaussians = 0;
};

/// Running screen-space gradient statistics used by densify_and_prune.
struct DensifyStats {
  std::vector<double> grad_accum;
  std::vector<long> count;

  void reset(std::size_t n) {
    grad_accum.assign(n, 0.0);
    count.assign(n, 0);
  }
  template <typename T>
  void add(const SceneGradients<T>& grads, const Camera& camera);
};

/// Clones small high-gradient Gaussians, splits large ones into two children
/// with scale / 1.6, then prunes activated opacity below the threshold. Returns
/// for every Gaussian of the new scene the index it came from in the old scene,
/// or -1 for newly created ones. Stats are reset to the new size.
template <typename T>
std::vector<long> densify_and_prune(GaussianSet<T>& scene, DensifyStats& stats, const DensifyConfig& config,
                                    double scene_extent, std::mt19937_64& rng);

/// Radius of the camera centres around their mean, padded by 10%; falls back
/// to 1 for a single static camera.
[[nodiscard]] double scene_extent(std::span<const Frame> frames);

template <typename T>
class Trainer {
 public:
  Trainer(GaussianSet<T> scene, DeformationField<T> field, TrainConfig config, double extent);

  /// One optimisation step on a uniformly sampled frame. Warmup steps render
  /// the canonical scene and leave the deformation network untouched.
  StepRecord step(std::span<const Frame> frames);

  /// Runs until total_iterations. `on_step` sees every record; `on_snapshot`
  /// fires every snapshot_every iterations.
  TrainReport run(std::span<const Frame> frames, const std::function<void(const StepRecord&)>& on_step = {},
                  const std::function<void(const Trainer&)>& on_snapshot = {});

  [[nodiscard]] const GaussianSet<T>& scene() const noexcept { return scene_; }
  [[nodiscard]] const DeformationField<T>& field() const noexcept { return field_; }
  [[nodiscard]] long iteration() const noexcept { return iteration_; }
  [[nodiscard]] const TrainConfig& config() const noexcept { return config_; }
  [[nodiscard]] const TrainReport& report() const noexcept { return report_; }

 private:
  void reset_gaussian_optimizers();
  void remap_gaussian_optimizers(const std::vector<long>& origin);

  GaussianSet<T> scene_;
  DeformationField<T> field_;
  TrainConfig config_;
  double extent_;
  long iteration_ = 0;
  std::mt19937_64 rng_;
  DensifyStats stats_;
  // positions, rotations, log_scales, opacity_logits, color_logits, features
  std::vector<AdamState<T>> gaussian_adam_;
  std::vector<AdamState<T>> field_adam_;  // weight, bias per layer
  TrainReport report_;
};

}  // namespace dgd
