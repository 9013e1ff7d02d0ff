#include "dgc/cluster/graph.hpp"

#include "dgc/core/errors.hpp"

#include <cmath>
#include <string>

namespace dgc::cluster {

MatD build_graph(const MatD& values, data::SplitView rows, double threshold) {
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("graph threshold must lie in (0, 1), got " + std::to_string(threshold));
  const MatD corr = data::channel_correlation(values, rows);
  const Eigen::Index n = corr.rows();
  MatD a = MatD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && std::abs(corr(i, j)) >= threshold) a(i, j) = 1.0;
  return a;
}

MatD propagation_operator(const MatD& adjacency) {
  require_shape(adjacency.rows() == adjacency.cols(), "propagation_operator: adjacency must be square");
  const MatD a_tilde = adjacency + MatD::Identity(adjacency.rows(), adjacency.cols());
  const VecD deg = a_tilde.rowwise().sum();
  for (Eigen::Index i = 0; i < deg.size(); ++i)
    if (!(deg(i) > 0)) throw ShapeMismatch("propagation_operator: non-positive degree at node " + std::to_string(i));
  const VecD inv_sqrt = deg.array().rsqrt();
  return inv_sqrt.asDiagonal() * a_tilde * inv_sqrt.asDiagonal();
}

MaskMatrix build_mask(const Labels& labels) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  MaskMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = labels[i] == labels[j] ? 1 : 0;
  return m;
}

MaskVector mask_vector(const MaskMatrix& mask) {
  require_shape(mask.rows() == mask.cols(), "mask_vector: mask must be square");
  MaskVector v(mask.rows(), 0);
  for (Eigen::Index i = 0; i < mask.rows(); ++i)
    for (Eigen::Index j = 0; j < mask.cols(); ++j)
      if (i != j && mask(i, j) != 0) {
        v[i] = 1;
        v[j] = 1;
      }
  return v;
}

MaskMatrix identity_mask(Eigen::Index n) {
  MaskMatrix m = MaskMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = 1;
  return m;
}

}  // namespace dgc::cluster
