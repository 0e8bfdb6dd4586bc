#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dgd {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-15;
};

/// Moments for one parameter array.
template <typename T>
struct AdamState {
  AdamConfig config;
  std::vector<T> first_moment;
  std::vector<T> second_moment;
  long step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size, AdamConfig cfg = {})
      : config(cfg), first_moment(size, T(0)), second_moment(size, T(0)) {}
};

/// One bias-corrected Adam update of `params` in place. Throws ShapeMismatch.
template <typename T>
void adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grads, double lr);

/// Exponential interpolation from lr_start to lr_end over total_steps, held
/// at lr_end afterwards.
struct LrSchedule {
  double lr_start = 8e-4;
  double lr_end = 1.6e-6;
  long total_steps = 40000;
};

[[nodiscard]] double exp_lr(const LrSchedule& schedule, long step);

}  // namespace dgd
