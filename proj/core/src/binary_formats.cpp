#include <algorithm>
#include <cmath>

#include "byte_io.hpp"
#include "dgd/io.hpp"

namespace dgd {

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map) {
  const std::size_t expected =
      static_cast<std::size_t>(map.height) * static_cast<std::size_t>(map.width) * map.channels;
  if (map.height < 1 || map.width < 1 || map.channels < 1 || map.data.size() != expected) {
    throw Error(Errc::ShapeMismatch, "feature map data does not match H x W x C");
  }
  detail::ByteWriter w;
  w.magic("DGDF");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(map.height));
  w.u32(static_cast<std::uint32_t>(map.width));
  w.u32(static_cast<std::uint32_t>(map.channels));
  for (float v : map.data) w.f32(v);
  w.save(path);
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic("DGDF");
  r.expect_version(kFormatVersion);
  FeatureMap map;
  map.height = static_cast<int>(r.u32());
  map.width = static_cast<int>(r.u32());
  map.channels = r.u32();
  const std::uint64_t count = static_cast<std::uint64_t>(map.height) * static_cast<std::uint64_t>(map.width) *
                              static_cast<std::uint64_t>(map.channels);
  if (count == 0) throw Error(Errc::ParseError, path.string() + ": empty feature map");
  r.require(4 * count);
  map.data.resize(count);
  for (auto& v : map.data) v = r.f32();
  r.expect_end();
  return map;
}

FeatureMap resize_bilinear(const FeatureMap& map, int height, int width) {
  if (height < 1 || width < 1) throw Error(Errc::InvalidArgument, "target size must be positive");
  if (map.height == height && map.width == width) return map;
  FeatureMap out;
  out.height = height;
  out.width = width;
  out.channels = map.channels;
  out.data.resize(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * map.channels);
  const auto source_coord = [](int i, int dst, int src) {
    return dst > 1 ? static_cast<double>(i) * (src - 1) / (dst - 1) : 0.0;
  };
  const std::size_t c_dim = map.channels;
  for (int y = 0; y < height; ++y) {
    const double sy = source_coord(y, height, map.height);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), map.height - 1);
    const int y1 = std::min(y0 + 1, map.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = source_coord(x, width, map.width);
      const int x0 = std::min(static_cast<int>(std::floor(sx)), map.width - 1);
      const int x1 = std::min(x0 + 1, map.width - 1);
      const double fx = sx - x0;
      const auto at = [&](int yy, int xx, std::size_t c) {
        return static_cast<double>(map.data[(static_cast<std::size_t>(yy) * map.width + xx) * c_dim + c]);
      };
      float* dst = &out.data[(static_cast<std::size_t>(y) * width + x) * c_dim];
      for (std::size_t c = 0; c < c_dim; ++c) {
        const double top = at(y0, x0, c) * (1.0 - fx) + at(y0, x1, c) * fx;
        const double bottom = at(y1, x0, c) * (1.0 - fx) + at(y1, x1, c) * fx;
        dst[c] = static_cast<float>(top * (1.0 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

void write_query_embedding(const std::filesystem::path& path, std::span<const float> embedding) {
  if (embedding.empty()) throw Error(Errc::InvalidArgument, "embedding is empty");
  detail::ByteWriter w;
  w.magic("DGDQ");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(embedding.size()));
  for (float v : embedding) w.f32(v);
  w.save(path);
}

std::vector<float> read_query_embedding(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic("DGDQ");
  r.expect_version(kFormatVersion);
  const std::uint32_t c = r.u32();
  if (c == 0) throw Error(Errc::ParseError, path.string() + ": empty embedding");
  r.require(4ULL * c);
  std::vector<float> out(c);
  for (auto& v : out) v = r.f32();
  r.expect_end();
  return out;
}

}  // namespace dgd
