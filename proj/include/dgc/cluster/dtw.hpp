#pragma once

#include "dgc/core/types.hpp"
#include "dgc/data/series.hpp"

#include <vector>

namespace dgc::cluster {

struct DtwOptions {
  Eigen::Index max_steps = 1000;  // trailing steps of the train split used
  Eigen::Index band = 50;         // Sakoe-Chiba radius; negative means unconstrained
};

/// sqrt of the minimal accumulated squared point cost under the symmetric
/// step pattern (match, insertion, deletion). Comparable to Euclidean
/// distance, which it never exceeds for equal-length inputs.
double dtw_distance(const Eigen::Ref<const VecD>& a, const Eigen::Ref<const VecD>& b, Eigen::Index band = -1);

/// Symmetric N x N matrix of channel DTW distances over the last
/// `max_steps` rows of `rows`.
MatD dtw_distance_matrix(const MatD& values, data::SplitView rows, const DtwOptions& options = {});

/// Average-linkage agglomeration of a distance matrix down to n clusters.
/// Ties merge the lowest-index pair first, so the result is deterministic.
Labels average_linkage(const MatD& distances, int n);

Labels dtw_cluster(const MatD& values, data::SplitView rows, int n, const DtwOptions& options = {});

struct DtwChoice {
  int n = 1;
  double score = -1;
  Labels labels;
};

/// Cuts the DTW dendrogram at every candidate count and keeps the best
/// silhouette (on DTW distances); ties go to the smaller count.
DtwChoice dtw_select(const MatD& values, data::SplitView rows, const std::vector<int>& candidates,
                     const DtwOptions& options = {});

}  // namespace dgc::cluster
