#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dgd {

/// Maps an H x W x C feature image to H x W x 3 in [0, 1]: projection on the
/// top three principal components fitted over this image's non-zero pixels,
/// each component min/max normalized. Fewer than three channels pad with 0.
template <typename T>
[[nodiscard]] std::vector<T> feature_pca_rgb(std::span<const T> features, std::size_t pixels, std::size_t channels);

}  // namespace dgd
