#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dgd/gaussians.hpp"
#include "dgd/math.hpp"

namespace dgd {

/// Frequency encoding: optionally the input itself, then for each band k the
/// block sin(2^k v) followed by the block cos(2^k v), each block holding one
/// value per input dimension.
struct FourierEncodingConfig {
  int num_bands = 10;
  bool include_input = true;

  [[nodiscard]] std::size_t encoded_length(std::size_t dim) const {
    return dim * ((include_input ? 1U : 0U) + 2U * static_cast<std::size_t>(num_bands));
  }
  friend bool operator==(const FourierEncodingConfig&, const FourierEncodingConfig&) = default;
};

template <typename T>
void fourier_encode(std::span<const T> v, const FourierEncodingConfig& cfg, std::span<T> out);

template <typename T>
[[nodiscard]] std::vector<T> fourier_encode(std::span<const T> v, const FourierEncodingConfig& cfg) {
  std::vector<T> out(cfg.encoded_length(v.size()));
  fourier_encode(v, cfg, std::span<T>(out));
  return out;
}

struct DeformationConfig {
  int depth = 8;   // hidden layers
  int width = 256;
  FourierEncodingConfig position{10, true};
  FourierEncodingConfig time{6, true};

  [[nodiscard]] std::size_t input_dim() const {
    return position.encoded_length(3) + time.encoded_length(1);
  }
  friend bool operator==(const DeformationConfig&, const DeformationConfig&) = default;
};

/// Output rows of the network: dx (0..2), dr (3..6), ds (7..9).
inline constexpr int kDeformOutputs = 10;

template <typename T>
struct Deformation {
  Vec3<T> dx = Vec3<T>::Zero();
  Vec4<T> dr = Vec4<T>::Zero();
  Vec3<T> ds = Vec3<T>::Zero();
};

template <typename T>
struct DenseLayer {
  MatX<T> weight;  // out x in
  VecX<T> bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() &&
           a.bias.size() == b.bias.size() && a.weight == b.weight && a.bias == b.bias;
  }
};

/// Time-conditioned deformation MLP: ReLU hidden layers over
/// concat(encode(x), encode(t)) and a linear 10-wide head split into
/// (dx, dr, ds). The head starts at zero, i.e. the identity deformation.
template <typename T>
class DeformationField {
 public:
  /// Activations kept by forward() for backward().
  struct Tape {
    MatX<T> input;                 // input_dim x N
    std::vector<MatX<T>> hidden;   // post-ReLU, width x N each
  };

  DeformationField() = default;
  DeformationField(const DeformationConfig& config, std::uint64_t seed);

  [[nodiscard]] const DeformationConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::vector<DenseLayer<T>>& layers() noexcept { return layers_; }
  [[nodiscard]] const std::vector<DenseLayer<T>>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t parameter_count() const;

  /// Throws ShapeMismatch if the layer chain does not match the config.
  void validate() const;

  [[nodiscard]] Deformation<T> deform(const Vec3<T>& x, T t) const;

  /// Batched forward for N positions (N x 3, row-major). Returns 10 x N.
  [[nodiscard]] MatX<T> forward(std::span<const T> positions, T t, Tape* tape = nullptr) const;

  /// Accumulates parameter gradients into `grads` (shaped like layers()) and,
  /// when `grad_positions` is non-empty, the input-position gradient (N x 3).
  void backward(const Tape& tape, const MatX<T>& grad_output, std::vector<DenseLayer<T>>& grads,
                std::span<T> grad_positions) const;

  [[nodiscard]] std::vector<DenseLayer<T>> zero_gradients() const;

  template <typename U>
  [[nodiscard]] DeformationField<U> cast() const {
    DeformationField<U> out;
    out.config_ = config_;
    for (const auto& l : layers_) out.layers_.push_back({l.weight.template cast<U>(), l.bias.template cast<U>()});
    return out;
  }

  friend bool operator==(const DeformationField&, const DeformationField&) = default;

 private:
  template <typename U>
  friend class DeformationField;

  DeformationConfig config_;
  std::vector<DenseLayer<T>> layers_;
};

/// Deformed copy: positions += dx, rotations += dr (unnormalized), log_scales
/// += ds. Opacity, color and features are untouched.
template <typename T>
[[nodiscard]] GaussianSet<T> apply_deformation(const GaussianSet<T>& gaussians, const DeformationField<T>& field,
                                               T t);

/// Annealed time jitter for training the deformation field.
struct AstConfig {
  double noise_scale_initial = 0.1;  // std of the jitter, in units of the frame interval
  long anneal_end_iteration = 20000;
};

/// t + N(0, (s0 * interval * max(0, 1 - it / end))^2), clamped to [0, 1];
/// exactly t once the schedule has annealed to zero. `interval` is the time
/// between training frames (1 / frame count).
[[nodiscard]] double ast_time(double t, long iteration, const AstConfig& config, std::mt19937_64& rng,
                              double interval = 1.0);

}  // namespace dgd
