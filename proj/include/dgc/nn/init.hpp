#pragma once

#include "dgc/core/types.hpp"

#include <cmath>
#include <random>

namespace dgc::nn {

template <typename T>
Mat<T> uniform(Eigen::Index rows, Eigen::Index cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(u(rng));
  return m;
}

/// Glorot uniform for an (in x out) weight.
template <typename T>
Mat<T> xavier(Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  return uniform<T>(in, out, std::sqrt(6.0 / static_cast<double>(in + out)), rng);
}

template <typename T>
Mat<T> zeros(Eigen::Index rows, Eigen::Index cols) {
  return Mat<T>::Zero(rows, cols);
}

template <typename T>
Mat<T> ones(Eigen::Index rows, Eigen::Index cols) {
  return Mat<T>::Ones(rows, cols);
}

}  // namespace dgc::nn
