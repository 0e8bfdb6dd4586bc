#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dgd/camera.hpp"

namespace dgd {

/// One supervision frame: a posed, timestamped image plus its feature map,
/// both at the camera resolution.
struct Frame {
  std::string name;
  Camera camera;
  double time = 0.0;
  std::vector<float> image;     // H x W x 3 in [0, 1]
  std::size_t feature_dim = 0;
  std::vector<float> features;  // H x W x C, empty when not supervised
};

}  // namespace dgd
