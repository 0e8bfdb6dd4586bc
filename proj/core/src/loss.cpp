#include "dgd/loss.hpp"

#include <cmath>

#include "dgd/error.hpp"

namespace dgd {

template <typename T>
LossResult<T> reconstruction_loss(const RenderOutput<T>& rendered, std::span<const float> gt_image,
                                  std::span<const float> gt_features, double lambda_f) {
  if (lambda_f < 0.0) throw Error(Errc::InvalidArgument, "feature loss weight must be >= 0");
  const std::size_t pixels = static_cast<std::size_t>(rendered.width) * static_cast<std::size_t>(rendered.height);
  if (gt_image.size() != 3 * pixels || rendered.color.size() != 3 * pixels) {
    throw Error(Errc::ShapeMismatch, "ground-truth image does not match the render");
  }
  LossResult<T> out;
  out.grad_color.assign(3 * pixels, T(0));
  out.grad_feature.assign(rendered.feature.size(), T(0));

  const T color_scale = T(1) / static_cast<T>(3 * pixels);
  T color_sum = T(0);
  for (std::size_t i = 0; i < 3 * pixels; ++i) {
    const T r = rendered.color[i] - static_cast<T>(gt_image[i]);
    color_sum += std::abs(r);
    out.grad_color[i] = r > T(0) ? color_scale : (r < T(0) ? -color_scale : T(0));
  }
  out.color_term = color_sum * color_scale;

  if (lambda_f > 0.0 && !rendered.feature.empty()) {
    if (gt_features.size() != rendered.feature.size()) {
      throw Error(Errc::ShapeMismatch, "ground-truth feature map does not match the render");
    }
    const T inv = T(1) / static_cast<T>(rendered.feature.size());
    const T weight = static_cast<T>(lambda_f);
    T sum = T(0);
    for (std::size_t i = 0; i < rendered.feature.size(); ++i) {
      const T r = rendered.feature[i] - static_cast<T>(gt_features[i]);
      sum += r * r;
      out.grad_feature[i] = weight * T(2) * r * inv;
    }
    out.feature_term = sum * inv;
  }
  out.loss = out.color_term + static_cast<T>(lambda_f) * out.feature_term;
  return out;
}

template <typename T>
Evaluation<T> evaluate(const GaussianSet<T>& scene, const DeformationField<T>* field, const Frame& frame, double t,
                       double lambda_f, const RenderOptions& options, bool with_gradients) {
  Evaluation<T> ev;
  typename DeformationField<T>::Tape tape;
  GaussianSet<T> deformed;
  const GaussianSet<T>* rendered_set = &scene;
  if (field != nullptr && !scene.empty()) {
    const MatX<T> delta = field->forward(scene.positions, static_cast<T>(t), with_gradients ? &tape : nullptr);
    deformed = scene;
    for (std::size_t i = 0; i < scene.size(); ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      for (int k = 0; k < 3; ++k) deformed.positions[3 * i + k] += delta(k, col);
      for (int k = 0; k < 4; ++k) deformed.rotations[4 * i + k] += delta(3 + k, col);
      for (int k = 0; k < 3; ++k) deformed.log_scales[3 * i + k] += delta(7 + k, col);
    }
    rendered_set = &deformed;
  }

  ev.render = render(*rendered_set, frame.camera, options);
  ev.loss = reconstruction_loss(ev.render, frame.image, frame.features, lambda_f);
  if (!with_gradients) return ev;

  RenderGradients<T> rg = render_backward<T>(*rendered_set, frame.camera, ev.loss.grad_color,
                                             lambda_f > 0.0 ? std::span<const T>(ev.loss.grad_feature)
                                                            : std::span<const T>(),
                                             {}, options);
  ev.grads.params = std::move(rg.params);
  ev.grads.mean2d = std::move(rg.mean2d);
  ev.grads.visible = std::move(rg.visible);

  if (field != nullptr && !scene.empty()) {
    const std::size_t n = scene.size();
    MatX<T> g_out(kDeformOutputs, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      for (int k = 0; k < 3; ++k) g_out(k, col) = ev.grads.params.positions[3 * i + k];
      for (int k = 0; k < 4; ++k) g_out(3 + k, col) = ev.grads.params.rotations[4 * i + k];
      for (int k = 0; k < 3; ++k) g_out(7 + k, col) = ev.grads.params.log_scales[3 * i + k];
    }
    ev.grads.field = field->zero_gradients();
    field->backward(tape, g_out, ev.grads.field, ev.grads.params.positions);
  }
  return ev;
}

#define DGD_INSTANTIATE(T)                                                                                      \
  template LossResult<T> reconstruction_loss<T>(const RenderOutput<T>&, std::span<const float>,                \
                                                std::span<const float>, double);                               \
  template Evaluation<T> evaluate<T>(const GaussianSet<T>&, const DeformationField<T>*, const Frame&, double, \
                                     double, const RenderOptions&, bool);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
