#pragma once

#include <optional>
#include <string_view>

#include "dgd/camera.hpp"
#include "dgd/deformation.hpp"
#include "dgd/gaussians.hpp"
#include "dgd/image.hpp"

namespace dgd {

enum class Channels { Color, FeaturePca, Alpha };

[[nodiscard]] std::optional<Channels> parse_channels(std::string_view name);

/// Deforms to `t` (when `field` is given), renders and converts to 8-bit RGB.
/// Alpha is replicated into all three channels. Shared by the CLI and the
/// service so both produce identical bytes.
template <typename T>
[[nodiscard]] Image render_view(const GaussianSet<T>& scene, const DeformationField<T>* field, const Camera& camera,
                                double t, Channels channels);

}  // namespace dgd
