#pragma once

#include "dgc/cluster/kmeans.hpp"
#include "dgc/data/series.hpp"
#include "dgc/train/config.hpp"
#include "dgc/train/model.hpp"

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace dgc::train {

/// A dataset standardised with train-split statistics.
struct PreparedData {
  std::string name;
  std::vector<std::string> channel_names;
  data::NormalizationStats stats;
  MatD values;  // normalised, T x N
  data::Splits splits;
};

/// Uses the series' own split sizes, or 0.7 / 0.1 / 0.2 when it has none.
PreparedData prepare(const data::MultivariateSeries& series, std::string name);

struct PretrainRecord {
  int epoch = 0;  // 0 is the untrained model
  double train_rec = 0;
  double val_rec = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_rec = 0, train_ds = 0, train_pred = 0, train_total = 0;
  double val_pred = 0;
  int mask_clusters = 0;  // clusters behind the mask used this epoch
  bool mask_identity = false;
  Labels labels;
  double seconds = 0;
};

struct StepRecord {
  double rec = 0, ds = 0, pred = 0, total = 0;
};

struct Metrics {
  double mse = 0;
  double mae = 0;
};

struct RunReport {
  std::string dataset;
  Eigen::Index lookback = 0;
  Eigen::Index horizon = 0;
  Ablation ablation = Ablation::Full;
  std::uint64_t seed = 0;
  std::string config_hash;
  LossWeights weights;

  std::vector<PretrainRecord> pretrain;
  int gcl_clusters = 0;  // width of the graph network output (0 if absent)
  std::vector<std::pair<int, double>> initial_scores;  // silhouette per candidate at initialisation
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;  // filled when requested
  int best_epoch = 0;
  double best_val_pred = 0;
  bool stopped_early = false;

  Labels labels;  // mask labels of the returned (best) model
  MaskMatrix mask;
  Metrics test;
  double wall_clock_s = 0;
};

struct TrainOptions {
  bool record_steps = false;
  std::string config_hash;
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(const PretrainRecord&)> on_pretrain_epoch;
};

struct TrainResult {
  RunReport report;
  std::unique_ptr<Model<float>> model;
};

/// Window sets for one (lookback, horizon) pair.
struct SplitWindows {
  data::WindowSet train, val, test;
};
SplitWindows make_split_windows(const PreparedData& data, Eigen::Index lookback, Eigen::Index horizon);

/// Windows used to (re)build the mask: the first full batch of the train split.
MatD reference_inputs(const data::WindowSet& train, Eigen::Index batch_size);

/// Mean latent code of each channel over the windows of a (B*N) x l2 block.
MatD channel_codes(const MatD& codes, Eigen::Index channels);

struct PretrainResult {
  std::vector<PretrainRecord> history;
  cluster::ClusterCountChoice choice;  // k-means on the reference codes
};

/// Minimises the reconstruction loss alone, then clusters the reference codes.
/// `candidates` beyond the channel count are dropped.
PretrainResult pretrain_rfl(Model<float>& model, const data::WindowSet& train, const data::WindowSet& val,
                            const TrainConfig& cfg, std::mt19937_64& shuffle,
                            const std::function<void(const PretrainRecord&)>& on_epoch = {});

/// Candidate counts that fit N channels (falls back to {N} if none do).
std::vector<int> feasible_counts(const std::vector<int>& candidates, Eigen::Index channels);

/// Normalised-space forecasts for a (B*N) x L batch, dropout off.
MatF predict(const Model<float>& model, const MatD& inputs, const MaskMatrix& mask);

/// Mean squared and absolute error over every entry.
Metrics error_metrics(const MatD& predictions, const MatD& targets);

/// error_metrics over every (window, channel, step) of a split.
Metrics evaluate(const Model<float>& model, const data::WindowSet& windows, const MaskMatrix& mask,
                 Eigen::Index batch_size, Eigen::Index max_windows = 0);

/// Joint training with early stopping; the returned model holds the best
/// validation parameters.
TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const PreparedData& data,
                  const TrainOptions& options = {});

}  // namespace dgc::train
