#pragma once

#include "dgc/core/types.hpp"

#include <cstdint>
#include <vector>

namespace dgc::cluster {

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // max centre movement (Euclidean) to stop
};

struct KMeansResult {
  Labels labels;
  MatD centers;  // n x d
  double inertia = 0;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Rows of `points` are samples.
/// An emptied cluster is re-seeded at the point farthest from its own centre.
KMeansResult kmeans(const MatD& points, int n, std::uint64_t seed, const KMeansOptions& options = {});

/// Mean silhouette coefficient (Euclidean). Singleton clusters score 0;
/// a single cluster scores -1 so it never beats a real partition.
double silhouette_score(const MatD& points, const Labels& labels);

/// Same score from a precomputed symmetric distance matrix.
double silhouette_from_distances(const MatD& distances, const Labels& labels);

/// Pairwise Euclidean distances between rows.
MatD pairwise_distances(const MatD& points);

/// Chance-corrected agreement of two labelings of the same items.
double adjusted_rand_index(const Labels& a, const Labels& b);

struct ClusterCountChoice {
  int n = 1;
  double score = -1;
  KMeansResult clustering;
  std::vector<std::pair<int, double>> scores;  // (candidate, silhouette)
};

/// Runs k-means for each candidate and keeps the best silhouette;
/// ties go to the smaller count.
ClusterCountChoice select_cluster_count(const MatD& points, const std::vector<int>& candidates, std::uint64_t seed);

/// Relabel so clusters are numbered by first appearance (0, 1, ...).
Labels canonical_labels(const Labels& labels);

}  // namespace dgc::cluster
