#pragma once

#include "dgc/cluster/dtw.hpp"
#include "dgc/core/errors.hpp"
#include "dgc/forecast/patch.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace dgc::train {

enum class Ablation { Full, NoGcl, NoRfl, DtwCluster, CiOnly };

std::string to_string(Ablation a);
Ablation ablation_from_string(const std::string& s);  // throws ConfigError

/// When the forecasting mask is rebuilt from the latent codes.
enum class ClusterRefresh { Epoch, Batch };

std::string to_string(ClusterRefresh r);
ClusterRefresh cluster_refresh_from_string(const std::string& s);

struct TrainConfig {
  double lambda1 = 0.1;
  double lambda2 = 1.0;
  double lr = 1e-4;
  Eigen::Index batch_size = 128;
  int max_epochs = 100;
  int patience = 20;
  std::uint64_t seed = 2024;
  std::vector<int> cluster_counts{2, 3, 4};
  Ablation ablation = Ablation::Full;

  int pretrain_epochs = 30;
  double pretrain_lr = 1e-3;
  ClusterRefresh cluster_refresh = ClusterRefresh::Epoch;
  /// Caps batches per epoch (0 = every window); for quick budgets only.
  Eigen::Index max_batches_per_epoch = 0;
  /// Caps evaluation windows per split (0 = all).
  Eigen::Index max_eval_windows = 0;

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0) throw ConfigError("lambda1 and lambda2 must be non-negative");
    if (!(lr > 0) || !(pretrain_lr > 0)) throw ConfigError("learning rates must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
    if (max_epochs < 0 || pretrain_epochs < 0) throw ConfigError("epoch counts must be non-negative");
    if (patience < 1 || patience > std::max(max_epochs, 1))
      throw ConfigError("patience must lie in [1, max_epochs] (got " + std::to_string(patience) + ")");
    if (cluster_counts.empty()) throw ConfigError("cluster_counts must not be empty");
    for (int n : cluster_counts)
      if (n < 1) throw ConfigError("cluster counts must be positive");
    if (max_batches_per_epoch < 0 || max_eval_windows < 0) throw ConfigError("caps must be non-negative");
  }
};

struct ModelConfig {
  Eigen::Index lookback = 96;
  Eigen::Index horizon = 96;
  forecast::PatchConfig patch;
  bool instance_norm = true;
  Eigen::Index l1 = 32;
  Eigen::Index l2 = 10;
  double epsilon = 0.5;          // GCN / autoencoder fusion
  double graph_threshold = 0.6;  // |pearson| cut for channel edges
  cluster::DtwOptions dtw;

  void validate() const {
    if (lookback < 1 || horizon < 1) throw ConfigError("lookback and horizon must be positive");
    if (l1 < 1 || l2 < 1) throw ConfigError("latent widths must be positive");
    if (!(epsilon >= 0 && epsilon <= 1)) throw ConfigError("epsilon must lie in [0, 1]");
    if (!(graph_threshold > 0 && graph_threshold < 1)) throw ConfigError("graph threshold must lie in (0, 1)");
    patch.validate(lookback);
  }
};

}  // namespace dgc::train
