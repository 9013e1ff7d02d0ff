#pragma once

// Patch transformer with two attention stages per layer: temporal attention
// over each channel's patches, then attention across channels at every patch
// position restricted by the cluster mask.
//
// Activations are (B*N*C) x d_model with rows ordered [window][channel][patch].

#include "dgc/autodiff/attention_op.hpp"
#include "dgc/autodiff/ops.hpp"
#include "dgc/cluster/graph.hpp"
#include "dgc/forecast/patch.hpp"
#include "dgc/nn/init.hpp"

#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace dgc::forecast {

struct ForecasterDims {
  Eigen::Index channels = 7;
  Eigen::Index lookback = 96;
  Eigen::Index horizon = 96;
  PatchConfig patch;
  bool instance_norm = true;
};

inline constexpr double kInstanceNormEps = 1e-5;

/// Post-norm transformer encoder block: LN(z + MSA(z)), then LN(. + MLP(.)).
template <typename T>
class AttentionBlock {
 public:
  AttentionBlock(ad::ParameterSet<T>& ps, const std::string& prefix, Eigen::Index d, Eigen::Index heads,
                 std::mt19937_64& rng)
      : heads_(heads) {
    auto lin = [&](const std::string& name, Eigen::Index in, Eigen::Index out) {
      return std::pair{&ps.add(prefix + "." + name + ".w", nn::xavier<T>(in, out, rng)),
                       &ps.add(prefix + "." + name + ".b", nn::zeros<T>(1, out))};
    };
    q_ = lin("q", d, d);
    k_ = lin("k", d, d);
    v_ = lin("v", d, d);
    o_ = lin("o", d, d);
    ff1_ = lin("ff1", d, 2 * d);
    ff2_ = lin("ff2", 2 * d, d);
    ln1_ = {&ps.add(prefix + ".ln1.gain", nn::ones<T>(1, d)), &ps.add(prefix + ".ln1.shift", nn::zeros<T>(1, d))};
    ln2_ = {&ps.add(prefix + ".ln2.gain", nn::ones<T>(1, d)), &ps.add(prefix + ".ln2.shift", nn::zeros<T>(1, d))};
  }

  ad::Var<T> forward(ad::Tape<T>& t, const ad::Var<T>& z, const ad::SeqLayout& layout, const Mat<T>* bias,
                     T dropout, std::mt19937_64* rng, Mat<T>* weights_out = nullptr) const {
    auto apply = [&](const auto& l, const ad::Var<T>& x) { return ad::linear(x, t.param(*l.first), t.param(*l.second)); };
    auto attn = ad::multi_head_attention(apply(q_, z), apply(k_, z), apply(v_, z), layout, heads_, bias, weights_out);
    auto a = ad::dropout(apply(o_, attn), dropout, rng);
    auto zh = ad::layer_norm(ad::add(z, a), t.param(*ln1_.first), t.param(*ln1_.second));
    auto f = ad::dropout(apply(ff2_, ad::relu(apply(ff1_, zh))), dropout, rng);
    return ad::layer_norm(ad::add(zh, f), t.param(*ln2_.first), t.param(*ln2_.second));
  }

 private:
  using Pair = std::pair<ad::Parameter<T>*, ad::Parameter<T>*>;
  Eigen::Index heads_;
  Pair q_, k_, v_, o_, ff1_, ff2_, ln1_, ln2_;
};

template <typename T>
struct ForwardOptions {
  /// Channel mask; nullptr or absent channel block means channel-independent.
  const MaskMatrix* mask = nullptr;
  bool channel_block = true;
  /// Dropout stream; nullptr disables dropout.
  std::mt19937_64* rng = nullptr;
  /// Receives the last layer's channel-attention probabilities when set.
  Mat<T>* channel_weights = nullptr;
};

template <typename T>
class Forecaster {
 public:
  Forecaster(ad::ParameterSet<T>& ps, const ForecasterDims& dims, std::mt19937_64& rng) : dims_(dims) {
    dims.patch.validate(dims.lookback);
    patches_ = patch_count(dims.lookback, dims.patch.patch_len, dims.patch.stride);
    const Eigen::Index d = dims.patch.d_model;
    embed_w_ = &ps.add("fc.embed.w", nn::xavier<T>(dims.patch.patch_len, d, rng));
    embed_b_ = &ps.add("fc.embed.b", nn::zeros<T>(1, d));
    pos_ = &ps.add("fc.pos", nn::uniform<T>(patches_, d, 0.02, rng));
    for (Eigen::Index l = 0; l < dims.patch.n_layers; ++l) {
      temporal_.push_back(
          std::make_unique<AttentionBlock<T>>(ps, "fc.l" + std::to_string(l) + ".temporal", d, dims.patch.n_heads, rng));
      channel_.push_back(
          std::make_unique<AttentionBlock<T>>(ps, "fc.l" + std::to_string(l) + ".channel", d, dims.patch.n_heads, rng));
    }
    head_w_ = &ps.add("fc.head.w", nn::xavier<T>(patches_ * d, dims.horizon, rng));
    head_b_ = &ps.add("fc.head.b", nn::zeros<T>(1, dims.horizon));
  }

  const ForecasterDims& dims() const { return dims_; }
  Eigen::Index patches() const { return patches_; }

  /// x: (B*N) x L windows in dataset-normalised space; returns (B*N) x S.
  ad::Var<T> forward(ad::Tape<T>& t, const Mat<T>& x, const ForwardOptions<T>& opt = {}) const {
    const Eigen::Index n = dims_.channels, c = patches_, d = dims_.patch.d_model;
    require_shape(x.cols() == dims_.lookback && x.rows() % n == 0,
                  "forecaster: input must be (B*" + std::to_string(n) + ") x " + std::to_string(dims_.lookback));
    const Eigen::Index batch = x.rows() / n;

    Vec<T> mean = Vec<T>::Zero(x.rows()), scale = Vec<T>::Ones(x.rows());
    Mat<T> xn = x;
    if (dims_.instance_norm) {
      mean = x.rowwise().mean();
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const T var = (x.row(r).array() - mean(r)).square().mean();
        scale(r) = std::sqrt(var + static_cast<T>(kInstanceNormEps));
      }
      xn = (x.colwise() - mean).array().colwise() / scale.array();
    }

    auto z = ad::linear(t.constant(patchify<T>(xn, dims_.patch.patch_len, dims_.patch.stride)), t.param(*embed_w_),
                        t.param(*embed_b_));
    z = ad::add_tiled(z, t.param(*pos_));

    MaskVector selector;
    Mat<T> bias;
    bool any_dependent = false;
    if (opt.channel_block && opt.mask != nullptr) {
      require_shape(opt.mask->rows() == n && opt.mask->cols() == n, "forecaster: mask must be N x N");
      const MaskVector mv = cluster::mask_vector(*opt.mask);
      selector.resize(batch * n * c);
      for (Eigen::Index b = 0; b < batch; ++b)
        for (Eigen::Index i = 0; i < n; ++i)
          for (Eigen::Index k = 0; k < c; ++k) selector[(b * n + i) * c + k] = mv[i];
      for (auto m : mv) any_dependent = any_dependent || m != 0;
      bias = cluster::mask_bias<T>(*opt.mask);
    }

    const T p = static_cast<T>(dims_.patch.dropout);
    const auto temporal_layout = ad::SeqLayout::contiguous(batch * n, c);
    const auto channel_layout = ad::SeqLayout::across_channels(batch, n, c);
    for (std::size_t l = 0; l < temporal_.size(); ++l) {
      z = temporal_[l]->forward(t, z, temporal_layout, nullptr, p, opt.rng);
      // Channels without a co-clustered partner skip the block entirely, so
      // an identity mask reproduces the channel-independent model exactly.
      if (any_dependent) {
        Mat<T>* weights = l + 1 == temporal_.size() ? opt.channel_weights : nullptr;
        auto zc = channel_[l]->forward(t, z, channel_layout, &bias, p, opt.rng, weights);
        z = ad::select_rows(zc, z, selector);
      }
    }

    auto y = ad::linear(ad::reshape(z, batch * n, c * d), t.param(*head_w_), t.param(*head_b_));
    if (dims_.instance_norm) y = ad::row_affine(y, scale, mean);
    return y;
  }

 private:
  ForecasterDims dims_;
  Eigen::Index patches_ = 0;
  ad::Parameter<T>*embed_w_, *embed_b_, *pos_, *head_w_, *head_b_;
  std::vector<std::unique_ptr<AttentionBlock<T>>> temporal_, channel_;
};

/// (1 / 2N) |Y_hat - Y|^2 averaged over the B windows of a batch.
template <typename T>
ad::Var<T> prediction_loss(const ad::Var<T>& y_hat, const ad::Var<T>& y, Eigen::Index channels) {
  require_shape(channels > 0 && y_hat.rows() % channels == 0, "prediction_loss: rows not a multiple of channels");
  const T windows = static_cast<T>(y_hat.rows() / channels);
  return ad::scaled_sq_error(y_hat, y, T(1) / (T(2) * static_cast<T>(channels) * windows));
}

/// Plain form for a single N x S forecast.
template <typename T>
T prediction_loss(const Mat<T>& y_hat, const Mat<T>& y) {
  require_shape(y_hat.rows() == y.rows() && y_hat.cols() == y.cols(), "prediction_loss: shapes differ");
  return (y_hat - y).squaredNorm() / (T(2) * static_cast<T>(y.rows()));
}

}  // namespace dgc::forecast
