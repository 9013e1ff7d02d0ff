#pragma once

#include "dgc/core/types.hpp"
#include "dgc/data/series.hpp"

namespace dgc::cluster {

inline constexpr double kDefaultGraphThreshold = 0.6;

/// Binary channel graph: A(i, j) = 1 iff i != j and |pearson(x_i, x_j)| >= threshold,
/// correlations taken over `rows` (the train split). Symmetric by construction.
MatD build_graph(const MatD& values, data::SplitView rows, double threshold = kDefaultGraphThreshold);

/// D^-1/2 (A + I) D^-1/2 with D the row sums of A + I.
MatD propagation_operator(const MatD& adjacency);

/// mask(i, j) = 1 iff labels[i] == labels[j].
MaskMatrix build_mask(const Labels& labels);

/// 1 for channels that share their cluster with at least one other channel.
MaskVector mask_vector(const MaskMatrix& mask);

/// Identity mask: every channel on its own.
MaskMatrix identity_mask(Eigen::Index n);

/// Additive attention bias: 0 where permitted, -1e9 elsewhere.
template <typename T>
Mat<T> mask_bias(const MaskMatrix& mask) {
  return mask.unaryExpr([](std::uint8_t m) { return m ? T(0) : T(-1e9); });
}

}  // namespace dgc::cluster
