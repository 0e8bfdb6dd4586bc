#pragma once

#include <Eigen/Core>
#include <cmath>

namespace dgd {

template <typename T> using Vec2 = Eigen::Matrix<T, 2, 1>;
template <typename T> using Vec3 = Eigen::Matrix<T, 3, 1>;
template <typename T> using Vec4 = Eigen::Matrix<T, 4, 1>;
template <typename T> using Mat2 = Eigen::Matrix<T, 2, 2>;
template <typename T> using Mat3 = Eigen::Matrix<T, 3, 3>;
template <typename T> using Mat23 = Eigen::Matrix<T, 2, 3>;
template <typename T> using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T> using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
[[nodiscard]] inline T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

template <typename T>
[[nodiscard]] inline T logit(T p) {
  return std::log(p / (T(1) - p));
}

}  // namespace dgd
