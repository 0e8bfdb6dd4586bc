#include "dgd/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dgd/error.hpp"
#include "dgd/rasterizer.hpp"

namespace dgd {

namespace {

template <typename T>
GaussianSet<T> deformed_or_copy(const GaussianSet<T>& scene, const DeformationField<T>* field, double t) {
  if (field == nullptr || scene.empty()) return scene;
  return apply_deformation(scene, *field, static_cast<T>(t));
}

void check_theta(double theta) {
  if (!(theta >= -1.0 && theta <= 1.0)) throw Error(Errc::InvalidArgument, "theta must lie in [-1, 1]");
}

}  // namespace

template <typename T>
std::vector<T> cosine_scores(const GaussianSet<T>& scene, std::span<const T> query) {
  if (query.size() != scene.feature_dim) {
    throw Error(Errc::DimensionMismatch, "query has " + std::to_string(query.size()) + " channels, scene has " +
                                             std::to_string(scene.feature_dim));
  }
  double qn = 0.0;
  for (T v : query) qn += static_cast<double>(v) * static_cast<double>(v);
  qn = std::sqrt(qn);
  if (!(qn > 1e-12)) throw Error(Errc::ZeroQuery, "query embedding has zero norm");

  std::vector<T> scores(scene.size());
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto f = scene.feature(i);
    double dot = 0.0;
    double fn = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      dot += static_cast<double>(f[k]) * static_cast<double>(query[k]);
      fn += static_cast<double>(f[k]) * static_cast<double>(f[k]);
    }
    fn = std::sqrt(fn);
    scores[i] = fn > 1e-12 ? static_cast<T>(std::clamp(dot / (fn * qn), -1.0, 1.0))
                           : -std::numeric_limits<T>::infinity();
  }
  return scores;
}

template <typename T>
SelectionResult<T> select_by_embedding(const GaussianSet<T>& scene, std::span<const T> query, double theta) {
  check_theta(theta);
  const std::vector<T> scores = cosine_scores(scene, query);
  SelectionResult<T> result;
  result.query_feature.assign(query.begin(), query.end());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<double>(scores[i]) >= theta) {
      result.gaussian_ids.push_back(i);
      result.scores.push_back(scores[i]);
    }
  }
  return result;
}

template <typename T>
SelectionResult<T> select_by_click(const GaussianSet<T>& scene, const DeformationField<T>* field,
                                   const Camera& camera, double t, int x, int y, double theta) {
  check_theta(theta);
  const GaussianSet<T> posed = deformed_or_copy(scene, field, t);
  const auto weights = contribution_weights(posed, camera, x, y);
  if (weights.empty()) {
    throw Error(Errc::EmptyPixel, "no Gaussian contributes at pixel (" + std::to_string(x) + ", " +
                                      std::to_string(y) + ")");
  }
  const auto f = scene.feature(weights.front().gaussian_id);
  const std::vector<T> query(f.begin(), f.end());
  return select_by_embedding(scene, std::span<const T>(query), theta);
}

template <typename T>
SelectionResult<T> select_by_pixels(const GaussianSet<T>& scene, const DeformationField<T>* field,
                                    const Camera& camera, double t, std::span<const std::pair<int, int>> pixels,
                                    double weight_threshold) {
  if (pixels.empty()) throw Error(Errc::InvalidArgument, "pixel set is empty");
  const GaussianSet<T> posed = deformed_or_copy(scene, field, t);
  std::map<std::size_t, T> best;
  for (const auto& [x, y] : pixels) {
    for (const auto& c : contribution_weights(posed, camera, x, y)) {
      if (static_cast<double>(c.weight) < weight_threshold) continue;
      auto [it, inserted] = best.emplace(c.gaussian_id, c.weight);
      if (!inserted) it->second = std::max(it->second, c.weight);
    }
  }
  SelectionResult<T> result;
  for (const auto& [id, w] : best) {
    result.gaussian_ids.push_back(id);
    result.scores.push_back(w);
  }
  return result;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

template <typename T>
Mask render_segmentation_mask(const GaussianSet<T>& scene, const DeformationField<T>* field,
                              std::span<const std::size_t> ids, const Camera& camera, double t,
                              double mask_alpha_threshold) {
  camera.validate();
  Mask mask;
  mask.width = camera.width;
  mask.height = camera.height;
  mask.data.assign(camera.pixel_count(), 0);
  if (ids.empty()) return mask;
  const GaussianSet<T> posed = deformed_or_copy(scene.subset(ids), field, t);
  const RenderOutput<T> out = render(posed, camera);
  for (std::size_t p = 0; p < mask.data.size(); ++p) {
    mask.data[p] = static_cast<double>(out.alpha[p]) >= mask_alpha_threshold ? 1 : 0;
  }
  return mask;
}

double iou(const Mask& a, const Mask& b) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size()) {
    throw Error(Errc::ShapeMismatch, "masks differ in size");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool pa = a.data[i] != 0;
    const bool pb = b.data[i] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double miou(std::span<const Mask> predicted, std::span<const Mask> truth) {
  if (predicted.size() != truth.size()) throw Error(Errc::ShapeMismatch, "mask counts differ");
  if (predicted.empty()) throw Error(Errc::ShapeMismatch, "no masks to compare");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += iou(predicted[i], truth[i]);
  return sum / static_cast<double>(predicted.size());
}

#define DGD_INSTANTIATE(T)                                                                                    \
  template std::vector<T> cosine_scores<T>(const GaussianSet<T>&, std::span<const T>);                        \
  template SelectionResult<T> select_by_embedding<T>(const GaussianSet<T>&, std::span<const T>, double);      \
  template SelectionResult<T> select_by_click<T>(const GaussianSet<T>&, const DeformationField<T>*,           \
                                                 const Camera&, double, int, int, double);                    \
  template SelectionResult<T> select_by_pixels<T>(const GaussianSet<T>&, const DeformationField<T>*,          \
                                                  const Camera&, double, std::span<const std::pair<int, int>>, \
                                                  double);                                                    \
  template Mask render_segmentation_mask<T>(const GaussianSet<T>&, const DeformationField<T>*,                \
                                            std::span<const std::size_t>, const Camera&, double, double);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
