#include "dgc/train/trainer.hpp"

#include "dgc/cluster/dtw.hpp"
#include "dgc/cluster/graph.hpp"
#include "dgc/train/adam.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace dgc::train {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t which) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(which)};
  return std::mt19937_64(seq);
}

std::vector<Eigen::Index> shuffled(Eigen::Index n, std::mt19937_64& rng) {
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NonFiniteLoss(what + " is not finite (" + std::to_string(v) + ")");
}

double reconstruction(const Model<float>& model, const MatD& x) {
  ad::Tape<float> t;
  auto c = cluster_terms(t, t.constant(cast<float>(x)), model.net());
  return c.rec.valid() ? static_cast<double>(c.rec.scalar()) : 0.0;
}

struct MaskState {
  Labels labels;
  MaskMatrix mask;
  int clusters = 0;
};

MaskState identity_state(Eigen::Index n) {
  MaskState s;
  s.labels.resize(n);
  std::iota(s.labels.begin(), s.labels.end(), 0);
  s.mask = cluster::identity_mask(n);
  s.clusters = static_cast<int>(n);
  return s;
}

MaskState from_labels(Labels labels) {
  MaskState s;
  s.labels = cluster::canonical_labels(labels);
  s.mask = cluster::build_mask(s.labels);
  s.clusters = s.labels.empty() ? 0 : *std::max_element(s.labels.begin(), s.labels.end()) + 1;
  return s;
}

}  // namespace

PreparedData prepare(const data::MultivariateSeries& series, std::string name) {
  PreparedData d;
  d.name = std::move(name);
  d.channel_names = series.channel_names;
  const data::SplitSizes sizes = series.split.empty() ? data::ratio_split(series.steps()) : series.split;
  d.splits = data::split(series, sizes);
  d.stats = data::NormalizationStats::fit(series.values, d.splits.train);
  d.values = d.stats.apply(series.values);
  return d;
}

SplitWindows make_split_windows(const PreparedData& data, Eigen::Index lookback, Eigen::Index horizon) {
  return {data::make_windows(data.values, data.splits.train, lookback, horizon),
          data::make_windows(data.values, data.splits.val, lookback, horizon),
          data::make_windows(data.values, data.splits.test, lookback, horizon)};
}

MatD reference_inputs(const data::WindowSet& train, Eigen::Index batch_size) {
  return train.gather_range(0, std::min(batch_size, train.size())).inputs;
}

MatD channel_codes(const MatD& codes, Eigen::Index channels) {
  require_shape(channels > 0 && codes.rows() % channels == 0, "channel_codes: rows not a multiple of channels");
  const Eigen::Index windows = codes.rows() / channels;
  MatD out = MatD::Zero(channels, codes.cols());
  for (Eigen::Index w = 0; w < windows; ++w) out += codes.middleRows(w * channels, channels);
  return out / static_cast<double>(windows);
}

std::vector<int> feasible_counts(const std::vector<int>& candidates, Eigen::Index channels) {
  std::vector<int> out;
  for (int n : candidates)
    if (n >= 1 && n <= channels) out.push_back(n);
  if (out.empty()) out.push_back(static_cast<int>(channels));
  return out;
}

PretrainResult pretrain_rfl(Model<float>& model, const data::WindowSet& train, const data::WindowSet& val,
                            const TrainConfig& cfg, std::mt19937_64& shuffle,
                            const std::function<void(const PretrainRecord&)>& on_epoch) {
  require_shape(model.rfl() != nullptr, "pretrain_rfl: model has no autoencoder");
  PretrainResult out;
  const Eigen::Index n = model.channels();
  const MatD reference = reference_inputs(train, cfg.batch_size);
  const MatD val_probe = val.gather_range(0, std::min(cfg.batch_size, val.size())).inputs;

  ClusterNet<float> net;
  net.rfl = model.rfl();
  net.channels = n;
  Adam<float> adam(model.rfl()->parameters());

  PretrainRecord start;
  start.train_rec = reconstruction(model, reference);
  start.val_rec = reconstruction(model, val_probe);
  out.history.push_back(start);
  if (on_epoch) on_epoch(start);

  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    const auto order = shuffled(train.size(), shuffle);
    Eigen::Index batches = (train.size() + cfg.batch_size - 1) / cfg.batch_size;
    if (cfg.max_batches_per_epoch > 0) batches = std::min(batches, cfg.max_batches_per_epoch);
    double sum = 0;
    for (Eigen::Index b = 0; b < batches; ++b) {
      const Eigen::Index first = b * cfg.batch_size;
      const Eigen::Index count = std::min(cfg.batch_size, train.size() - first);
      const std::vector<Eigen::Index> idx(order.begin() + first, order.begin() + first + count);
      const auto batch = train.gather(idx);
      ad::Tape<float> t;
      auto c = cluster_terms(t, t.constant(cast<float>(batch.inputs)), net);
      const double loss = c.rec.scalar();
      require_finite(loss, "reconstruction loss (pretraining epoch " + std::to_string(epoch) + ")");
      adam.zero_grad();
      t.backward(c.rec);
      adam.step(cfg.pretrain_lr);
      sum += loss;
    }
    PretrainRecord rec;
    rec.epoch = epoch;
    rec.train_rec = sum / static_cast<double>(std::max<Eigen::Index>(batches, 1));
    rec.val_rec = reconstruction(model, val_probe);
    out.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  const MatD codes = channel_codes(model.latent_codes(reference), n);
  out.choice = cluster::select_cluster_count(codes, feasible_counts(cfg.cluster_counts, n), cfg.seed);
  return out;
}

MatF predict(const Model<float>& model, const MatD& inputs, const MaskMatrix& mask) {
  ad::Tape<float> t;
  MatF y = model.forecaster().forward(t, cast<float>(inputs), {&mask}).value();
  if (!y.allFinite()) throw NonFiniteActivation("forecast contains non-finite values");
  return y;
}

Metrics error_metrics(const MatD& predictions, const MatD& targets) {
  require_shape(predictions.rows() == targets.rows() && predictions.cols() == targets.cols(),
                "error_metrics: shapes differ");
  if (predictions.size() == 0) return {};
  const auto err = (predictions - targets).array();
  const double count = static_cast<double>(err.size());
  return {err.square().sum() / count, err.abs().sum() / count};
}

Metrics evaluate(const Model<float>& model, const data::WindowSet& windows, const MaskMatrix& mask,
                 Eigen::Index batch_size, Eigen::Index max_windows) {
  const Eigen::Index total = max_windows > 0 ? std::min(max_windows, windows.size()) : windows.size();
  double se = 0, ae = 0;
  Eigen::Index count = 0;
  for (Eigen::Index first = 0; first < total; first += batch_size) {
    const auto batch = windows.gather_range(first, std::min(batch_size, total - first));
    const MatD err = cast<double>(predict(model, batch.inputs, mask)) - batch.targets;
    se += err.squaredNorm();
    ae += err.cwiseAbs().sum();
    count += err.size();
  }
  if (count == 0) return {};
  return {se / static_cast<double>(count), ae / static_cast<double>(count)};
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& cfg, const PreparedData& data,
                  const TrainOptions& options) {
  model_cfg.validate();
  cfg.validate();
  const auto t0 = Clock::now();
  const Eigen::Index n = data.values.cols();
  const Ablation ablation = cfg.ablation;
  const SplitWindows w = make_split_windows(data, model_cfg.lookback, model_cfg.horizon);

  auto init_rng = stream(cfg.seed, 0);
  auto shuffle_rng = stream(cfg.seed, 1);
  auto dropout_rng = stream(cfg.seed, 2);

  TrainResult result;
  RunReport& report = result.report;
  report.dataset = data.name;
  report.lookback = model_cfg.lookback;
  report.horizon = model_cfg.horizon;
  report.ablation = ablation;
  report.seed = cfg.seed;
  report.config_hash = options.config_hash;
  report.weights = {cfg.lambda1, cfg.lambda2};

  const MatD adjacency = cluster::build_graph(data.values, data.splits.train, model_cfg.graph_threshold);
  result.model = std::make_unique<Model<float>>(model_cfg, ablation, n, adjacency, init_rng);
  Model<float>& model = *result.model;
  const std::vector<int> candidates = feasible_counts(cfg.cluster_counts, n);
  const MatD reference = reference_inputs(w.train, cfg.batch_size);

  if (uses_clustering(ablation)) {
    cluster::ClusterCountChoice choice;
    if (uses_rfl(ablation)) {
      auto pre = pretrain_rfl(model, w.train, w.val, cfg, shuffle_rng, options.on_pretrain_epoch);
      report.pretrain = std::move(pre.history);
      choice = std::move(pre.choice);
    } else {
      choice = cluster::select_cluster_count(channel_codes(model.latent_codes(reference), n), candidates, cfg.seed);
    }
    report.initial_scores = choice.scores;
    if (uses_gcl(ablation)) {
      model.attach_clustering(choice.clustering.centers, init_rng);
      report.gcl_clusters = choice.n;
    }
  }

  MaskState fixed;
  if (ablation == Ablation::DtwCluster)
    fixed = from_labels(cluster::dtw_select(data.values, data.splits.train, candidates, model_cfg.dtw).labels);
  else if (ablation == Ablation::CiOnly)
    fixed = identity_state(n);

  auto refresh = [&](const MatD& x) -> MaskState {
    if (ablation == Ablation::DtwCluster || ablation == Ablation::CiOnly) return fixed;
    const MatD codes = channel_codes(model.latent_codes(x), n);
    return from_labels(cluster::select_cluster_count(codes, candidates, cfg.seed).clustering.labels);
  };

  Adam<float> adam(model.all_parameters());
  const LossWeights weights{cfg.lambda1, cfg.lambda2};
  const Eigen::Index horizon = model_cfg.horizon;

  MaskState best_mask = refresh(reference);
  std::vector<Mat<float>> best_params = model.params().snapshot();
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto te = Clock::now();
    MaskState mask = refresh(reference);
    const auto order = shuffled(w.train.size(), shuffle_rng);
    Eigen::Index batches = (w.train.size() + cfg.batch_size - 1) / cfg.batch_size;
    if (cfg.max_batches_per_epoch > 0) batches = std::min(batches, cfg.max_batches_per_epoch);

    EpochRecord rec;
    rec.epoch = epoch;
    for (Eigen::Index b = 0; b < batches; ++b) {
      const Eigen::Index first = b * cfg.batch_size;
      const Eigen::Index count = std::min(cfg.batch_size, w.train.size() - first);
      const std::vector<Eigen::Index> idx(order.begin() + first, order.begin() + first + count);
      const auto batch = w.train.gather(idx);
      if (cfg.cluster_refresh == ClusterRefresh::Batch) mask = refresh(batch.inputs);

      ad::Tape<float> t;
      auto x = t.constant(cast<float>(batch.inputs));
      ClusterTerms<float> terms;
      if (uses_clustering(ablation)) {
        try {
          terms = cluster_terms(t, x, model.net());
        } catch (const DegenerateCluster&) {
          // An emptied centre: re-initialise the centres from this batch and move on.
          auto* mu = model.params().find("mu");
          const MatD codes = channel_codes(model.latent_codes(batch.inputs), n);
          if (mu) mu->value = cast<float>(cluster::kmeans(codes, static_cast<int>(mu->value.rows()), cfg.seed).centers);
          continue;
        }
      }
      auto y_hat = model.forecaster().forward(t, cast<float>(batch.inputs), {&mask.mask, true, &dropout_rng});
      auto pred = forecast::prediction_loss(y_hat, t.constant(cast<float>(batch.targets)), n);
      auto total = total_loss(terms, pred, weights);

      StepRecord step;
      step.pred = pred.scalar();
      step.rec = terms.rec.valid() ? terms.rec.scalar() : 0.0;
      step.ds = terms.ds.valid() ? terms.ds.scalar() : 0.0;
      step.total = total.scalar();
      require_finite(step.total, "total loss (epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) + ")");

      adam.zero_grad();
      t.backward(total);
      adam.step(cfg.lr);

      rec.train_rec += step.rec;
      rec.train_ds += step.ds;
      rec.train_pred += step.pred;
      rec.train_total += step.total;
      if (options.record_steps) report.steps.push_back(step);
    }
    const double nb = static_cast<double>(std::max<Eigen::Index>(batches, 1));
    rec.train_rec /= nb;
    rec.train_ds /= nb;
    rec.train_pred /= nb;
    rec.train_total /= nb;

    if (cfg.cluster_refresh == ClusterRefresh::Batch) mask = refresh(reference);
    const Metrics val = evaluate(model, w.val, mask.mask, cfg.batch_size, cfg.max_eval_windows);
    rec.val_pred = 0.5 * static_cast<double>(horizon) * val.mse;  // mean per-window (1/2N)|.|^2
    require_finite(rec.val_pred, "validation loss (epoch " + std::to_string(epoch) + ")");
    rec.mask_clusters = mask.clusters;
    rec.mask_identity = mask.mask == cluster::identity_mask(n);
    rec.labels = mask.labels;
    rec.seconds = seconds_since(te);
    report.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);

    if (rec.val_pred < best_val) {
      best_val = rec.val_pred;
      report.best_epoch = epoch;
      best_params = model.params().snapshot();
      best_mask = mask;
    } else if (epoch - report.best_epoch >= cfg.patience) {
      report.stopped_early = true;
      break;
    }
  }

  model.params().restore(best_params);
  report.best_val_pred = report.epochs.empty() ? 0.0 : best_val;
  report.labels = best_mask.labels;
  report.mask = best_mask.mask;
  report.test = evaluate(model, w.test, best_mask.mask, cfg.batch_size, cfg.max_eval_windows);
  report.wall_clock_s = seconds_since(t0);
  return result;
}

}  // namespace dgc::train
