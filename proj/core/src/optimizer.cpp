#include "dgd/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "dgd/error.hpp"

namespace dgd {

template <typename T>
void adam_step(AdamState<T>& state, std::span<T> params, std::span<const T> grads, double lr) {
  if (params.size() != grads.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(Errc::ShapeMismatch, "Adam: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const T step_size = static_cast<T>(lr / correction1);
  const T sqrt_c2 = static_cast<T>(std::sqrt(correction2));
  const T eps = static_cast<T>(state.config.epsilon);
  const T tb1 = static_cast<T>(b1);
  const T tb2 = static_cast<T>(b2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    T& m = state.first_moment[i];
    T& v = state.second_moment[i];
    m = tb1 * m + (T(1) - tb1) * g;
    v = tb2 * v + (T(1) - tb2) * g * g;
    params[i] -= step_size * m / (std::sqrt(v) / sqrt_c2 + eps);
  }
}

double exp_lr(const LrSchedule& schedule, long step) {
  if (!(schedule.lr_start > 0.0) || !(schedule.lr_end > 0.0) || schedule.total_steps < 1) {
    throw Error(Errc::InvalidArgument, "learning-rate schedule needs positive endpoints and total_steps >= 1");
  }
  if (step <= 0) return schedule.lr_start;
  if (step >= schedule.total_steps) return schedule.lr_end;
  const double progress = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return std::exp((1.0 - progress) * std::log(schedule.lr_start) + progress * std::log(schedule.lr_end));
}

template void adam_step<float>(AdamState<float>&, std::span<float>, std::span<const float>, double);
template void adam_step<double>(AdamState<double>&, std::span<double>, std::span<const double>, double);

}  // namespace dgd
