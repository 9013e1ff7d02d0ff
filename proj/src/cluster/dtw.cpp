#include "dgc/cluster/dtw.hpp"

#include "dgc/cluster/kmeans.hpp"
#include "dgc/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace dgc::cluster {

double dtw_distance(const Eigen::Ref<const VecD>& a, const Eigen::Ref<const VecD>& b, Eigen::Index band) {
  const Eigen::Index n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw ShapeMismatch("dtw: empty sequence");
  const Eigen::Index r = band < 0 ? std::max(n, m) : std::max(band, std::abs(n - m));
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const Eigen::Index lo = std::max<Eigen::Index>(1, i - r), hi = std::min(m, i + r);
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const double d = a(i - 1) - b(j - 1);
      cur[j] = d * d + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return std::sqrt(prev[m]);
}

MatD dtw_distance_matrix(const MatD& values, data::SplitView rows, const DtwOptions& options) {
  if (rows.size() < 1 || rows.end > values.rows()) throw ShapeMismatch("dtw: invalid row range");
  const Eigen::Index len = options.max_steps > 0 ? std::min(rows.size(), options.max_steps) : rows.size();
  const Eigen::Index first = rows.end - len;
  const Eigen::Index n = values.cols();
  std::vector<VecD> cols(n);
  for (Eigen::Index c = 0; c < n; ++c) cols[c] = values.col(c).segment(first, len);
  MatD d = MatD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = dtw_distance(cols[i], cols[j], options.band);
  return d;
}

Labels average_linkage(const MatD& distances, int n) {
  const Eigen::Index m = distances.rows();
  require_shape(distances.cols() == m, "average_linkage: distance matrix must be square");
  if (n < 1 || n > m) throw ShapeMismatch("average_linkage: need 1 <= n <= items (n=" + std::to_string(n) + ")");
  std::vector<std::vector<Eigen::Index>> clusters(m);
  for (Eigen::Index i = 0; i < m; ++i) clusters[i] = {i};
  auto linkage = [&](const auto& a, const auto& b) {
    double s = 0;
    for (auto i : a)
      for (auto j : b) s += distances(i, j);
    return s / static_cast<double>(a.size() * b.size());
  };
  while (static_cast<int>(clusters.size()) > n) {
    std::size_t bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double l = linkage(clusters[i], clusters[j]);
        if (l < best) {
          best = l;
          bi = i;
          bj = j;
        }
      }
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  Labels labels(m, 0);
  for (std::size_t k = 0; k < clusters.size(); ++k)
    for (auto i : clusters[k]) labels[i] = static_cast<int>(k);
  return canonical_labels(labels);
}

Labels dtw_cluster(const MatD& values, data::SplitView rows, int n, const DtwOptions& options) {
  return average_linkage(dtw_distance_matrix(values, rows, options), n);
}

DtwChoice dtw_select(const MatD& values, data::SplitView rows, const std::vector<int>& candidates,
                     const DtwOptions& options) {
  if (candidates.empty()) throw ConfigError("dtw_select: no candidate cluster counts");
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const MatD d = dtw_distance_matrix(values, rows, options);
  DtwChoice best;
  bool have = false;
  for (int n : sorted) {
    Labels labels = average_linkage(d, n);
    const double s = n == 1 ? -1.0 : silhouette_from_distances(d, labels);
    if (!have || s > best.score) {
      best = {n, s, std::move(labels)};
      have = true;
    }
  }
  return best;
}

}  // namespace dgc::cluster
