#include "dgc/cluster/kmeans.hpp"

#include "dgc/core/errors.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <string>

namespace dgc::cluster {

namespace {

MatD plus_plus_seed(const MatD& x, int n, std::mt19937_64& rng) {
  const Eigen::Index m = x.rows();
  MatD centers(n, x.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, m - 1);
  centers.row(0) = x.row(first(rng));
  VecD d2(m);
  for (Eigen::Index i = 0; i < m; ++i) d2(i) = (x.row(i) - centers.row(0)).squaredNorm();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 1; k < n; ++k) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double r = u(rng) * total;
      pick = m - 1;
      for (Eigen::Index i = 0; i < m; ++i) {
        r -= d2(i);
        if (r < 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min<Eigen::Index>(k, m - 1);
    }
    centers.row(k) = x.row(pick);
    for (Eigen::Index i = 0; i < m; ++i) d2(i) = std::min(d2(i), (x.row(i) - centers.row(k)).squaredNorm());
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const MatD& points, int n, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index m = points.rows();
  if (n < 1 || n > m)
    throw ShapeMismatch("kmeans: need 1 <= n <= points (n=" + std::to_string(n) + ", points=" + std::to_string(m) + ")");
  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centers = plus_plus_seed(points, n, rng);
  res.labels.assign(m, 0);

  auto assign = [&] {
    double inertia = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int k = 0; k < n; ++k) {
        const double d = (points.row(i) - res.centers.row(k)).squaredNorm();
        if (d < best) {
          best = d;
          arg = k;
        }
      }
      res.labels[i] = arg;
      inertia += best;
    }
    return inertia;
  };

  res.inertia = assign();
  for (int it = 0; it < options.max_iterations; ++it) {
    res.iterations = it + 1;
    MatD next = MatD::Zero(n, points.cols());
    std::vector<Eigen::Index> counts(n, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      next.row(res.labels[i]) += points.row(i);
      ++counts[res.labels[i]];
    }
    for (int k = 0; k < n; ++k) {
      if (counts[k] > 0) {
        next.row(k) /= static_cast<double>(counts[k]);
        continue;
      }
      // Empty cluster: move it to the point worst served by its centre.
      double worst = -1;
      Eigen::Index arg = 0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = (points.row(i) - res.centers.row(res.labels[i])).squaredNorm();
        if (d > worst) {
          worst = d;
          arg = i;
        }
      }
      next.row(k) = points.row(arg);
    }
    double moved = 0;
    for (int k = 0; k < n; ++k) moved = std::max(moved, (next.row(k) - res.centers.row(k)).norm());
    res.centers = std::move(next);
    res.inertia = assign();
    if (moved <= options.tolerance) break;
  }
  return res;
}

MatD pairwise_distances(const MatD& points) {
  const Eigen::Index m = points.rows();
  MatD d = MatD::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
  return d;
}

double silhouette_score(const MatD& points, const Labels& labels) {
  return silhouette_from_distances(pairwise_distances(points), labels);
}

double silhouette_from_distances(const MatD& distances, const Labels& labels) {
  const Eigen::Index m = distances.rows();
  require_shape(distances.cols() == m, "silhouette: distance matrix must be square");
  require_shape(static_cast<Eigen::Index>(labels.size()) == m, "silhouette: label count differs from points");
  std::map<int, Eigen::Index> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) return -1.0;
  double total = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sizes[labels[i]] == 1) continue;  // singleton contributes 0
    std::map<int, double> sum;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) sum[labels[j]] += distances(i, j);
    const double a = sum[labels[i]] / static_cast<double>(sizes[labels[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, s] : sum)
      if (label != labels[i]) b = std::min(b, s / static_cast<double>(sizes[label]));
    const double denom = std::max(a, b);
    total += denom > 0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(m);
}

double adjusted_rand_index(const Labels& a, const Labels& b) {
  require_shape(a.size() == b.size(), "adjusted_rand_index: labelings differ in length");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double index = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [_, v] : table) index += c2(v);
  for (const auto& [_, v] : rows) sum_rows += c2(v);
  for (const auto& [_, v] : cols) sum_cols += c2(v);
  const double expected = sum_rows * sum_cols / c2(n);
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;  // both trivial partitions
  return (index - expected) / (max_index - expected);
}

ClusterCountChoice select_cluster_count(const MatD& points, const std::vector<int>& candidates, std::uint64_t seed) {
  if (candidates.empty()) throw ConfigError("select_cluster_count: no candidate cluster counts");
  std::vector<int> sorted = candidates;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  ClusterCountChoice best;
  bool have = false;
  for (int n : sorted) {
    if (n < 1 || n > points.rows())
      throw ConfigError("cluster count " + std::to_string(n) + " outside [1, " + std::to_string(points.rows()) + "]");
    KMeansResult km = kmeans(points, n, seed);
    const double s = n == 1 ? -1.0 : silhouette_score(points, km.labels);
    best.scores.emplace_back(n, s);
    if (!have || s > best.score) {  // strict: ties keep the smaller n
      best.n = n;
      best.score = s;
      best.clustering = std::move(km);
      have = true;
    }
  }
  return best;
}

Labels canonical_labels(const Labels& labels) {
  std::map<int, int> remap;
  Labels out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto it = remap.find(labels[i]);
    if (it == remap.end()) it = remap.emplace(labels[i], static_cast<int>(remap.size())).first;
    out[i] = it->second;
  }
  return out;
}

}  // namespace dgc::cluster
