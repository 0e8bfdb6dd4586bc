#pragma once

#include <span>
#include <vector>

#include "dgd/deformation.hpp"
#include "dgd/frame.hpp"
#include "dgd/rasterizer.hpp"

namespace dgd {

template <typename T>
struct LossResult {
  T loss = T(0);
  T color_term = T(0);    // mean |C - C_gt|
  T feature_term = T(0);  // mean (F - F_gt)^2, before weighting
  std::vector<T> grad_color;    // H x W x 3
  std::vector<T> grad_feature;  // H x W x C
};

/// mean|C - C_gt| + lambda_f * mean (F - F_gt)^2 and its image-space gradient.
/// Throws ShapeMismatch.
template <typename T>
[[nodiscard]] LossResult<T> reconstruction_loss(const RenderOutput<T>& rendered, std::span<const float> gt_image,
                                                std::span<const float> gt_features, double lambda_f);

template <typename T>
struct SceneGradients {
  GaussianSet<T> params;                 // canonical-space parameter gradients
  std::vector<DenseLayer<T>> field;      // empty when the deformation was not active
  std::vector<T> mean2d;                 // N x 2, projected-mean gradient (pixels)
  std::vector<unsigned char> visible;
};

template <typename T>
struct Evaluation {
  LossResult<T> loss;
  RenderOutput<T> render;
  SceneGradients<T> grads;
};

/// Renders `frame` (deforming the canonical scene to `t` when `field` is
/// non-null), scores it and backpropagates into every Gaussian parameter and,
/// if present, every deformation-network parameter. Position gradients include
/// the path through the network's position encoding.
template <typename T>
[[nodiscard]] Evaluation<T> evaluate(const GaussianSet<T>& scene, const DeformationField<T>* field, const Frame& frame,
                                     double t, double lambda_f, const RenderOptions& options,
                                     bool with_gradients = true);

}  // namespace dgd
