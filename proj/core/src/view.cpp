#include "dgd/view.hpp"

#include "dgd/pca.hpp"
#include "dgd/rasterizer.hpp"

namespace dgd {

std::optional<Channels> parse_channels(std::string_view name) {
  if (name == "color") return Channels::Color;
  if (name == "feature-pca") return Channels::FeaturePca;
  if (name == "alpha") return Channels::Alpha;
  return std::nullopt;
}

template <typename T>
Image render_view(const GaussianSet<T>& scene, const DeformationField<T>* field, const Camera& camera, double t,
                  Channels channels) {
  const RenderOutput<T> out =
      field != nullptr ? render(apply_deformation(scene, *field, static_cast<T>(t)), camera) : render(scene, camera);
  const int w = camera.width;
  const int h = camera.height;
  switch (channels) {
    case Channels::Color:
      return to_image<T>(out.color, w, h, 3);
    case Channels::FeaturePca: {
      const auto rgb = feature_pca_rgb<T>(out.feature, camera.pixel_count(), out.feature_dim);
      return to_image<T>(rgb, w, h, 3);
    }
    case Channels::Alpha:
      break;
  }
  std::vector<T> rgb(camera.pixel_count() * 3);
  for (std::size_t p = 0; p < camera.pixel_count(); ++p) {
    for (int k = 0; k < 3; ++k) rgb[3 * p + static_cast<std::size_t>(k)] = out.alpha[p];
  }
  return to_image<T>(rgb, w, h, 3);
}

template Image render_view<float>(const GaussianSet<float>&, const DeformationField<float>*, const Camera&, double,
                                  Channels);
template Image render_view<double>(const GaussianSet<double>&, const DeformationField<double>*, const Camera&,
                                   double, Channels);

}  // namespace dgd
