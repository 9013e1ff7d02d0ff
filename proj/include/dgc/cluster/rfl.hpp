#pragma once

// GRU autoencoder over single channels. Each row of the input is one
// channel's look-back window, so a batch of B windows with N channels is a
// (B*N) x L matrix.

#include "dgc/autodiff/gru_op.hpp"
#include "dgc/autodiff/ops.hpp"
#include "dgc/nn/init.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace dgc::cluster {

struct LatentDims {
  Eigen::Index lookback = 96;
  Eigen::Index l1 = 32;
  Eigen::Index l2 = 10;
};

template <typename T>
struct Latents {
  ad::Var<T> h1;  // rows x l1
  ad::Var<T> h2;  // rows x l2
};

template <typename T>
class Rfl {
 public:
  Rfl(ad::ParameterSet<T>& ps, const LatentDims& dims, std::mt19937_64& rng) : dims_(dims) {
    const Eigen::Index h = dims.l1;
    const double gb = 1.0 / std::sqrt(static_cast<double>(h));
    enc_wi_ = &ps.add("rfl.enc.w_ih", nn::uniform<T>(1, 3 * h, gb, rng));
    enc_wh_ = &ps.add("rfl.enc.w_hh", nn::uniform<T>(h, 3 * h, gb, rng));
    enc_bi_ = &ps.add("rfl.enc.b_ih", nn::uniform<T>(1, 3 * h, gb, rng));
    enc_bh_ = &ps.add("rfl.enc.b_hh", nn::uniform<T>(1, 3 * h, gb, rng));
    w_enc_ = &ps.add("rfl.w_enc", nn::xavier<T>(h, dims.l2, rng));
    b_enc_ = &ps.add("rfl.b_enc", nn::zeros<T>(1, dims.l2));
    w_dec_ = &ps.add("rfl.w_dec", nn::xavier<T>(dims.l2, h, rng));
    b_dec_ = &ps.add("rfl.b_dec", nn::zeros<T>(1, h));
    dec_wi_ = &ps.add("rfl.dec.w_ih", nn::uniform<T>(h, 3 * h, gb, rng));
    dec_wh_ = &ps.add("rfl.dec.w_hh", nn::uniform<T>(h, 3 * h, gb, rng));
    dec_bi_ = &ps.add("rfl.dec.b_ih", nn::uniform<T>(1, 3 * h, gb, rng));
    dec_bh_ = &ps.add("rfl.dec.b_hh", nn::uniform<T>(1, 3 * h, gb, rng));
    w_out_ = &ps.add("rfl.w_out", nn::xavier<T>(h, 1, rng));
    b_out_ = &ps.add("rfl.b_out", nn::zeros<T>(1, 1));
  }

  const LatentDims& dims() const { return dims_; }

  /// H1 = relu(final GRU state), H2 = relu(H1 W_enc + b_enc).
  Latents<T> encode(ad::Tape<T>& t, const ad::Var<T>& x) const {
    require_shape(x.cols() == dims_.lookback, "rfl encode: window length " + std::to_string(x.cols()) +
                                                  " vs configured " + std::to_string(dims_.lookback));
    const Eigen::Index h = dims_.l1;
    auto h0 = t.constant(Mat<T>::Zero(x.rows(), h));
    auto states = ad::gru_sequence(x, dims_.lookback, false, h0, t.param(*enc_wi_), t.param(*enc_wh_),
                                   t.param(*enc_bi_), t.param(*enc_bh_));
    auto h1 = ad::relu(ad::col_block(states, (dims_.lookback - 1) * h, h));
    auto h2 = ad::relu(ad::linear(h1, t.param(*w_enc_), t.param(*b_enc_)));
    return {h1, h2};
  }

  /// H~1 = relu(H2 W_dec + b_dec) seeds the decoder GRU (initial state and
  /// repeated input); a shared linear readout maps each state to one value.
  ad::Var<T> decode(ad::Tape<T>& t, const ad::Var<T>& h2) const {
    require_shape(h2.cols() == dims_.l2, "rfl decode: latent width mismatch");
    const Eigen::Index h = dims_.l1, rows = h2.rows(), len = dims_.lookback;
    auto h1 = ad::relu(ad::linear(h2, t.param(*w_dec_), t.param(*b_dec_)));
    auto states = ad::gru_sequence(h1, len, true, h1, t.param(*dec_wi_), t.param(*dec_wh_), t.param(*dec_bi_),
                                   t.param(*dec_bh_));
    auto per_step = ad::linear(ad::reshape(states, rows * len, h), t.param(*w_out_), t.param(*b_out_));
    return ad::reshape(per_step, rows, len);
  }

  std::vector<ad::Parameter<T>*> parameters() const {
    return {enc_wi_, enc_wh_, enc_bi_, enc_bh_, w_enc_, b_enc_, w_dec_,
            b_dec_,  dec_wi_, dec_wh_, dec_bi_, dec_bh_, w_out_, b_out_};
  }

 private:
  LatentDims dims_;
  ad::Parameter<T>*enc_wi_, *enc_wh_, *enc_bi_, *enc_bh_;
  ad::Parameter<T>*w_enc_, *b_enc_, *w_dec_, *b_dec_;
  ad::Parameter<T>*dec_wi_, *dec_wh_, *dec_bi_, *dec_bh_;
  ad::Parameter<T>*w_out_, *b_out_;
};

/// Replacement for the autoencoder when it is ablated: both latent layers
/// are linear projections of the raw window and nothing is reconstructed.
template <typename T>
class LinearLatent {
 public:
  LinearLatent(ad::ParameterSet<T>& ps, const LatentDims& dims, std::mt19937_64& rng) : dims_(dims) {
    w1_ = &ps.add("lin.w1", nn::xavier<T>(dims.lookback, dims.l1, rng));
    b1_ = &ps.add("lin.b1", nn::zeros<T>(1, dims.l1));
    w2_ = &ps.add("lin.w2", nn::xavier<T>(dims.lookback, dims.l2, rng));
    b2_ = &ps.add("lin.b2", nn::zeros<T>(1, dims.l2));
  }

  const LatentDims& dims() const { return dims_; }

  Latents<T> encode(ad::Tape<T>& t, const ad::Var<T>& x) const {
    require_shape(x.cols() == dims_.lookback, "linear latent: window length mismatch");
    return {ad::linear(x, t.param(*w1_), t.param(*b1_)), ad::linear(x, t.param(*w2_), t.param(*b2_))};
  }

  std::vector<ad::Parameter<T>*> parameters() const { return {w1_, b1_, w2_, b2_}; }

 private:
  LatentDims dims_;
  ad::Parameter<T>*w1_, *b1_, *w2_, *b2_;
};

}  // namespace dgc::cluster
