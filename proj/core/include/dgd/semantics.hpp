#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dgd/camera.hpp"
#include "dgd/deformation.hpp"
#include "dgd/gaussians.hpp"

namespace dgd {

inline constexpr double kDefaultTheta = 0.7;
inline constexpr double kDefaultMaskAlphaThreshold = 0.5;

template <typename T>
struct SelectionResult {
  std::vector<std::size_t> gaussian_ids;  // ascending
  std::vector<T> query_feature;
  std::vector<T> scores;                  // cosine similarity, parallel to gaussian_ids
};

/// Cosine similarity of every feature to `query`; Gaussians with a (near) zero
/// feature get -inf so no threshold selects them.
template <typename T>
[[nodiscard]] std::vector<T> cosine_scores(const GaussianSet<T>& scene, std::span<const T> query);

/// { i : cos(f_i, q) >= theta }. Throws ZeroQuery, DimensionMismatch,
/// InvalidArgument (theta outside [-1, 1]).
template <typename T>
[[nodiscard]] SelectionResult<T> select_by_embedding(const GaussianSet<T>& scene, std::span<const T> query,
                                                     double theta);

/// Resolves the click to the max-weight Gaussian of the scene deformed to `t`
/// and queries with its canonical feature. `field` may be null (static scene).
/// Throws EmptyPixel, PixelOutOfBounds.
template <typename T>
[[nodiscard]] SelectionResult<T> select_by_click(const GaussianSet<T>& scene, const DeformationField<T>* field,
                                                 const Camera& camera, double t, int x, int y, double theta);

/// Union over pixels of Gaussians whose T_i * alpha_i >= weight_threshold.
/// Scores hold the best weight seen for each id; query_feature is empty.
template <typename T>
[[nodiscard]] SelectionResult<T> select_by_pixels(const GaussianSet<T>& scene, const DeformationField<T>* field,
                                                  const Camera& camera, double t,
                                                  std::span<const std::pair<int, int>> pixels,
                                                  double weight_threshold);

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1, row-major

  [[nodiscard]] std::size_t count() const;
  friend bool operator==(const Mask&, const Mask&) = default;
};

/// Renders only `ids` (deformed to `t`) and thresholds the accumulated alpha.
template <typename T>
[[nodiscard]] Mask render_segmentation_mask(const GaussianSet<T>& scene, const DeformationField<T>* field,
                                            std::span<const std::size_t> ids, const Camera& camera, double t,
                                            double mask_alpha_threshold = kDefaultMaskAlphaThreshold);

/// |a ∩ b| / |a ∪ b|, 1 when both are empty. Throws ShapeMismatch.
[[nodiscard]] double iou(const Mask& a, const Mask& b);

/// Mean per-frame IoU. Throws ShapeMismatch on count or size mismatch.
[[nodiscard]] double miou(std::span<const Mask> predicted, std::span<const Mask> truth);

}  // namespace dgd
