#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace dgc {

// Row-major storage lets a (rows*k) x c block be reinterpreted as rows x (k*c)
// without copying, which the patch and GRU layouts rely on.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatD = Mat<double>;
using MatF = Mat<float>;
using VecD = Vec<double>;

using Labels = std::vector<int>;

// Binary N x N channel mask; 1 where attention between channels is permitted.
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskVector = std::vector<std::uint8_t>;

template <typename To, typename From>
Mat<To> cast(const Mat<From>& m) {
  return m.template cast<To>();
}

}  // namespace dgc
