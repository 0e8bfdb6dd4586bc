#include "dgd/pca.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <limits>

#include "dgd/error.hpp"
#include "dgd/math.hpp"

namespace dgd {

template <typename T>
std::vector<T> feature_pca_rgb(std::span<const T> features, std::size_t pixels, std::size_t channels) {
  if (features.size() != pixels * channels) throw Error(Errc::ShapeMismatch, "feature image size mismatch");
  std::vector<T> out(pixels * 3, T(0));
  if (channels == 0 || pixels == 0) return out;

  using Map = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  const Map f(features.data(), static_cast<Eigen::Index>(pixels), static_cast<Eigen::Index>(channels));

  std::vector<Eigen::Index> rows;
  for (Eigen::Index p = 0; p < f.rows(); ++p) {
    if (f.row(p).squaredNorm() > T(0)) rows.push_back(p);
  }
  if (rows.empty()) return out;

  VecX<T> mean = VecX<T>::Zero(f.cols());
  for (Eigen::Index p : rows) mean += f.row(p).transpose();
  mean /= static_cast<T>(rows.size());
  MatX<T> cov = MatX<T>::Zero(f.cols(), f.cols());
  for (Eigen::Index p : rows) {
    const VecX<T> d = f.row(p).transpose() - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<MatX<T>> eig(cov);
  const Eigen::Index c = f.cols();
  const Eigen::Index k = std::min<Eigen::Index>(3, c);

  for (Eigen::Index comp = 0; comp < k; ++comp) {
    VecX<T> axis = eig.eigenvectors().col(c - 1 - comp);  // eigenvalues ascend
    // Fix the sign so the largest-magnitude entry is positive: deterministic colors.
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis[arg] < T(0)) axis = -axis;
    T lo = std::numeric_limits<T>::infinity();
    T hi = -lo;
    std::vector<T> proj(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      proj[r] = (f.row(rows[r]).transpose() - mean).dot(axis);
      lo = std::min(lo, proj[r]);
      hi = std::max(hi, proj[r]);
    }
    const T span = hi - lo;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const T v = span > T(0) ? (proj[r] - lo) / span : T(0.5);
      out[static_cast<std::size_t>(rows[r]) * 3 + static_cast<std::size_t>(comp)] = v;
    }
  }
  return out;
}

template std::vector<float> feature_pca_rgb(std::span<const float>, std::size_t, std::size_t);
template std::vector<double> feature_pca_rgb(std::span<const double>, std::size_t, std::size_t);

}  // namespace dgd
