#include "byte_io.hpp"
#include "dgd/io.hpp"

namespace dgd {

namespace {

constexpr std::uint32_t kIncludePositionInput = 1U;
constexpr std::uint32_t kIncludeTimeInput = 2U;

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const GaussianSet<T>& scene, const DeformationField<T>& field,
                     std::uint64_t iteration) {
  scene.validate();
  field.validate();
  const DeformationConfig& cfg = field.config();
  detail::ByteWriter w;
  w.magic("DGDC");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(scene.size()));
  w.u32(static_cast<std::uint32_t>(scene.feature_dim));
  w.u32(static_cast<std::uint32_t>(cfg.depth));
  w.u32(static_cast<std::uint32_t>(cfg.width));
  w.u32(static_cast<std::uint32_t>(cfg.position.num_bands));
  w.u32(static_cast<std::uint32_t>(cfg.time.num_bands));
  w.u32((cfg.position.include_input ? kIncludePositionInput : 0U) | (cfg.time.include_input ? kIncludeTimeInput : 0U));
  for (const auto* block : {&scene.positions, &scene.rotations, &scene.log_scales, &scene.opacity_logits,
                            &scene.color_logits, &scene.features}) {
    for (T v : *block) w.f32(static_cast<float>(v));
  }
  for (const auto& layer : field.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f32(static_cast<float>(layer.weight(r, c)));
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f32(static_cast<float>(layer.bias[r]));
  }
  w.u64(iteration);
  w.save(path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  detail::ByteReader r(detail::read_file(path), path.string());
  r.expect_magic("DGDC");
  r.expect_version(kFormatVersion);
  const std::uint64_t n = r.u32();
  const std::uint64_t c = r.u32();
  DeformationConfig cfg;
  cfg.depth = static_cast<int>(r.u32());
  cfg.width = static_cast<int>(r.u32());
  cfg.position.num_bands = static_cast<int>(r.u32());
  cfg.time.num_bands = static_cast<int>(r.u32());
  const std::uint32_t flags = r.u32();
  cfg.position.include_input = (flags & kIncludePositionInput) != 0;
  cfg.time.include_input = (flags & kIncludeTimeInput) != 0;
  if (n == 0 || c == 0 || cfg.depth < 0 || cfg.width < 1 || cfg.position.num_bands < 0 || cfg.time.num_bands < 0 ||
      cfg.depth > 64 || cfg.width > 65536 || cfg.position.num_bands > 64 || cfg.time.num_bands > 64) {
    throw Error(Errc::ParseError, path.string() + ": implausible checkpoint header");
  }

  std::uint64_t mlp = 0;
  std::uint64_t fan_in = cfg.input_dim();
  for (int l = 0; l <= cfg.depth; ++l) {
    const std::uint64_t out = l == cfg.depth ? kDeformOutputs : static_cast<std::uint64_t>(cfg.width);
    mlp += out * fan_in + out;
    fan_in = out;
  }
  r.require(4 * (n * (3 + 4 + 3 + 1 + 3 + c) + mlp) + 8);

  Checkpoint<T> ck;
  ck.scene = GaussianSet<T>(n, c);
  for (auto* block : {&ck.scene.positions, &ck.scene.rotations, &ck.scene.log_scales, &ck.scene.opacity_logits,
                      &ck.scene.color_logits, &ck.scene.features}) {
    for (T& v : *block) v = static_cast<T>(r.f32());
  }
  ck.field = DeformationField<T>(cfg, 0);
  for (auto& layer : ck.field.layers()) {
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row) {
      for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) layer.weight(row, col) = static_cast<T>(r.f32());
    }
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias[row] = static_cast<T>(r.f32());
  }
  ck.iteration = r.u64();
  r.expect_end();
  return ck;
}

template void save_checkpoint<float>(const std::filesystem::path&, const GaussianSet<float>&,
                                     const DeformationField<float>&, std::uint64_t);
template void save_checkpoint<double>(const std::filesystem::path&, const GaussianSet<double>&,
                                      const DeformationField<double>&, std::uint64_t);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace dgd
