#include "dgd/deformation.hpp"

#include <algorithm>

#include "dgd/error.hpp"

namespace dgd {

template <typename T>
void fourier_encode(std::span<const T> v, const FourierEncodingConfig& cfg, std::span<T> out) {
  const std::size_t d = v.size();
  if (out.size() != cfg.encoded_length(d)) throw Error(Errc::ShapeMismatch, "encoding buffer has wrong length");
  std::size_t o = 0;
  if (cfg.include_input) {
    for (std::size_t i = 0; i < d; ++i) out[o++] = v[i];
  }
  for (int k = 0; k < cfg.num_bands; ++k) {
    const T freq = static_cast<T>(std::ldexp(1.0, k));
    for (std::size_t i = 0; i < d; ++i) out[o + i] = std::sin(freq * v[i]);
    for (std::size_t i = 0; i < d; ++i) out[o + d + i] = std::cos(freq * v[i]);
    o += 2 * d;
  }
}

template <typename T>
DeformationField<T>::DeformationField(const DeformationConfig& config, std::uint64_t seed) : config_(config) {
  if (config.depth < 0 || config.width < 1 || config.position.num_bands < 0 || config.time.num_bands < 0) {
    throw Error(Errc::InvalidArgument, "invalid deformation network configuration");
  }
  std::mt19937_64 rng(seed);
  Eigen::Index fan_in = static_cast<Eigen::Index>(config.input_dim());
  for (int l = 0; l < config.depth; ++l) {
    DenseLayer<T> layer{MatX<T>(config.width, fan_in), VecX<T>(config.width)};
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = static_cast<T>(bound * uniform(rng));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = static_cast<T>(bound * uniform(rng));
    layers_.push_back(std::move(layer));
    fan_in = config.width;
  }
  layers_.push_back({MatX<T>::Zero(kDeformOutputs, fan_in), VecX<T>::Zero(kDeformOutputs)});
}

template <typename T>
std::size_t DeformationField<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

template <typename T>
void DeformationField<T>::validate() const {
  if (layers_.size() != static_cast<std::size_t>(config_.depth) + 1) {
    throw Error(Errc::ShapeMismatch, "layer count does not match depth");
  }
  Eigen::Index fan_in = static_cast<Eigen::Index>(config_.input_dim());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Eigen::Index out = l + 1 == layers_.size() ? kDeformOutputs : config_.width;
    const auto& layer = layers_[l];
    if (layer.weight.rows() != out || layer.weight.cols() != fan_in || layer.bias.size() != out) {
      throw Error(Errc::ShapeMismatch, "layer " + std::to_string(l) + " has the wrong shape");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw Error(Errc::InvalidArgument, "non-finite deformation parameter");
    }
    fan_in = out;
  }
}

template <typename T>
MatX<T> DeformationField<T>::forward(std::span<const T> positions, T t, Tape* tape) const {
  if (layers_.empty()) throw Error(Errc::ShapeMismatch, "deformation field has no layers");
  if (positions.size() % 3 != 0) throw Error(Errc::ShapeMismatch, "positions must be N x 3");
  const Eigen::Index n = static_cast<Eigen::Index>(positions.size() / 3);
  const std::size_t pos_len = config_.position.encoded_length(3);
  const std::size_t time_len = config_.time.encoded_length(1);
  if (static_cast<Eigen::Index>(pos_len + time_len) != layers_.front().weight.cols()) {
    throw Error(Errc::ShapeMismatch, "encoded input does not match the first layer");
  }

  MatX<T> input(static_cast<Eigen::Index>(pos_len + time_len), n);
  std::vector<T> time_code = fourier_encode(std::span<const T>(&t, 1), config_.time);
  for (Eigen::Index i = 0; i < n; ++i) {
    T* col = input.col(i).data();
    fourier_encode(positions.subspan(3 * static_cast<std::size_t>(i), 3), config_.position,
                   std::span<T>(col, pos_len));
    std::copy(time_code.begin(), time_code.end(), col + pos_len);
  }

  MatX<T> h = std::move(input);
  if (tape != nullptr) {
    tape->input = h;
    tape->hidden.clear();
  }
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    MatX<T> next = layers_[l].weight * h;
    next.colwise() += layers_[l].bias;
    next = next.cwiseMax(T(0));
    if (tape != nullptr) tape->hidden.push_back(next);
    h = std::move(next);
  }
  MatX<T> out = layers_.back().weight * h;
  out.colwise() += layers_.back().bias;
  return out;
}

template <typename T>
void DeformationField<T>::backward(const Tape& tape, const MatX<T>& grad_output, std::vector<DenseLayer<T>>& grads,
                                   std::span<T> grad_positions) const {
  const Eigen::Index n = tape.input.cols();
  if (grad_output.rows() != kDeformOutputs || grad_output.cols() != n || grads.size() != layers_.size() ||
      tape.hidden.size() + 1 != layers_.size()) {
    throw Error(Errc::ShapeMismatch, "deformation backward: inconsistent shapes");
  }
  MatX<T> g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const MatX<T>& below = l == 0 ? tape.input : tape.hidden[l - 1];
    if (l + 1 < layers_.size()) {
      // ReLU: pass gradient only where the activation was positive.
      g = g.cwiseProduct((tape.hidden[l].array() > T(0)).matrix().template cast<T>());
    }
    grads[l].weight.noalias() += g * below.transpose();
    grads[l].bias += g.rowwise().sum();
    if (l > 0 || !grad_positions.empty()) {
      MatX<T> down = layers_[l].weight.transpose() * g;
      g = std::move(down);
    }
  }
  if (grad_positions.empty()) return;
  if (grad_positions.size() != 3 * static_cast<std::size_t>(n)) {
    throw Error(Errc::ShapeMismatch, "position gradient buffer must be N x 3");
  }
  // g now holds d/d(encoded input); chain through the position encoding.
  const auto& cfg = config_.position;
  for (Eigen::Index i = 0; i < n; ++i) {
    T* gx = &grad_positions[3 * static_cast<std::size_t>(i)];
    std::size_t o = 0;
    if (cfg.include_input) {
      for (int d = 0; d < 3; ++d) gx[d] += g(static_cast<Eigen::Index>(d), i);
      o = 3;
    }
    for (int k = 0; k < cfg.num_bands; ++k) {
      const T freq = static_cast<T>(std::ldexp(1.0, k));
      for (int d = 0; d < 3; ++d) {
        // sin/cos values are already in the tape: d sin = freq cos, d cos = -freq sin.
        const T s = tape.input(static_cast<Eigen::Index>(o + d), i);
        const T c = tape.input(static_cast<Eigen::Index>(o + 3 + d), i);
        gx[d] += freq * (c * g(static_cast<Eigen::Index>(o + d), i) - s * g(static_cast<Eigen::Index>(o + 3 + d), i));
      }
      o += 6;
    }
  }
}

template <typename T>
std::vector<DenseLayer<T>> DeformationField<T>::zero_gradients() const {
  std::vector<DenseLayer<T>> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) {
    out.push_back({MatX<T>::Zero(l.weight.rows(), l.weight.cols()), VecX<T>::Zero(l.bias.size())});
  }
  return out;
}

template <typename T>
Deformation<T> DeformationField<T>::deform(const Vec3<T>& x, T t) const {
  const MatX<T> out = forward(std::span<const T>(x.data(), 3), t);
  Deformation<T> d;
  d.dx = out.col(0).template segment<3>(0);
  d.dr = out.col(0).template segment<4>(3);
  d.ds = out.col(0).template segment<3>(7);
  return d;
}

template <typename T>
GaussianSet<T> apply_deformation(const GaussianSet<T>& gaussians, const DeformationField<T>& field, T t) {
  GaussianSet<T> out = gaussians;
  if (gaussians.empty()) return out;
  const MatX<T> delta = field.forward(gaussians.positions, t);
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (int k = 0; k < 3; ++k) out.positions[3 * i + k] += delta(k, col);
    for (int k = 0; k < 4; ++k) out.rotations[4 * i + k] += delta(3 + k, col);
    for (int k = 0; k < 3; ++k) out.log_scales[3 * i + k] += delta(7 + k, col);
  }
  return out;
}

double ast_time(double t, long iteration, const AstConfig& config, std::mt19937_64& rng, double interval) {
  if (config.anneal_end_iteration < 1) throw Error(Errc::InvalidArgument, "anneal end must be >= 1");
  if (!(interval >= 0.0)) throw Error(Errc::InvalidArgument, "frame interval must be >= 0");
  const double remaining =
      std::max(0.0, 1.0 - static_cast<double>(iteration) / static_cast<double>(config.anneal_end_iteration));
  const double sigma = config.noise_scale_initial * interval * remaining;
  if (!(sigma > 0.0)) return t;
  std::normal_distribution<double> normal(0.0, sigma);
  return std::clamp(t + normal(rng), 0.0, 1.0);
}

#define DGD_INSTANTIATE(T)                                                                           \
  template void fourier_encode<T>(std::span<const T>, const FourierEncodingConfig&, std::span<T>);   \
  template class DeformationField<T>;                                                                \
  template GaussianSet<T> apply_deformation<T>(const GaussianSet<T>&, const DeformationField<T>&, T);

DGD_INSTANTIATE(float)
DGD_INSTANTIATE(double)

}  // namespace dgd
