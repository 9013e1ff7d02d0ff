#pragma once

#include "dgc/autodiff/tape.hpp"

#include <string>

namespace dgc::ad {

/// Single-layer GRU unrolled for `steps` steps over a batch of R sequences.
///
///   r = sigmoid(x W_r + b_ir + h W_hr + b_hr)
///   z = sigmoid(x W_z + b_iz + h W_hz + b_hz)
///   n = tanh(x W_n + b_in + r .* (h W_hn + b_hn))
///   h' = (1 - z) .* n + z .* h
///
/// Gate blocks are packed [r | z | n] along the columns of w_ih (in x 3H),
/// w_hh (H x 3H), b_ih and b_hh (1 x 3H).
///
/// `input` is either R x (steps * in), step t using columns [t*in, (t+1)*in),
/// or R x in when `repeat_input` is set (same input every step).
/// Returns every hidden state, R x (steps * H), step-major.
template <typename T>
Var<T> gru_sequence(const Var<T>& input, Eigen::Index steps, bool repeat_input, const Var<T>& h0,
                    const Var<T>& w_ih, const Var<T>& w_hh, const Var<T>& b_ih, const Var<T>& b_hh) {
  const Eigen::Index R = h0.rows();
  const Eigen::Index H = h0.cols();
  const Eigen::Index in = w_ih.rows();
  require_shape(steps > 0, "gru: steps must be positive");
  require_shape(w_ih.cols() == 3 * H && w_hh.rows() == H && w_hh.cols() == 3 * H, "gru: weight shapes");
  require_shape(b_ih.rows() == 1 && b_ih.cols() == 3 * H && b_hh.rows() == 1 && b_hh.cols() == 3 * H,
                "gru: bias shapes");
  require_shape(input.rows() == R, "gru: input rows must match h0 rows");
  require_shape(input.cols() == (repeat_input ? in : steps * in),
                "gru: input has " + std::to_string(input.cols()) + " columns, expected " +
                    std::to_string(repeat_input ? in : steps * in));

  const auto& x = input.value();
  const auto& Wi = w_ih.value();
  const auto& Wh = w_hh.value();
  const auto bi = b_ih.value().row(0);
  const auto bh = b_hh.value().row(0);

  // Saved activations for the backward sweep, stacked step-major as
  // (steps * R) x H so each step is a contiguous row panel.
  Mat<T> h_all(steps * R, H), r_all(steps * R, H), z_all(steps * R, H), n_all(steps * R, H),
      hn_all(steps * R, H);

  Mat<T> gi_const;
  if (repeat_input) gi_const = (x * Wi).rowwise() + bi;
  Mat<T> gi(R, 3 * H), gh(R, 3 * H);
  Mat<T> h = h0.value();
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (repeat_input) {
      gi = gi_const;
    } else {
      gi.noalias() = x.middleCols(t * in, in) * Wi;
      gi.rowwise() += bi;
    }
    gh.noalias() = h * Wh;
    gh.rowwise() += bh;
    auto r = r_all.middleRows(t * R, R).array();
    auto z = z_all.middleRows(t * R, R).array();
    auto n = n_all.middleRows(t * R, R).array();
    auto hn = hn_all.middleRows(t * R, R).array();
    r = (gi.leftCols(H) + gh.leftCols(H)).array().logistic();
    z = (gi.middleCols(H, H) + gh.middleCols(H, H)).array().logistic();
    hn = gh.rightCols(H).array();
    n = (gi.rightCols(H).array() + r * hn).tanh();
    h.array() = (T(1) - z) * n + z * h.array();
    h_all.middleRows(t * R, R) = h;
  }

  Mat<T> states(R, steps * H);
  for (Eigen::Index t = 0; t < steps; ++t) states.middleCols(t * H, H) = h_all.middleRows(t * R, R);

  const int ix = input.id, ih0 = h0.id, iwi = w_ih.id, iwh = w_hh.id, ibi = b_ih.id, ibh = b_hh.id;
  return input.tape->make(
      std::move(states), {input, h0, w_ih, w_hh, b_ih, b_hh},
      [=, h_all = std::move(h_all), r_all = std::move(r_all), z_all = std::move(z_all), n_all = std::move(n_all),
       hn_all = std::move(hn_all)](Tape<T>& tp, const Mat<T>& g, const Mat<T>&) {
        const auto& x = tp.value(ix);
        const auto& Wi = tp.value(iwi);
        const auto& Wh = tp.value(iwh);
        const Mat<T>& h0v = tp.value(ih0);
        const bool want_x = tp.needs_grad(ix);
        Mat<T> dWi = Mat<T>::Zero(Wi.rows(), Wi.cols());
        Mat<T> dWh = Mat<T>::Zero(Wh.rows(), Wh.cols());
        Mat<T> dbi = Mat<T>::Zero(1, 3 * H);
        Mat<T> dbh = Mat<T>::Zero(1, 3 * H);
        Mat<T> dx;
        if (want_x) dx = Mat<T>::Zero(x.rows(), x.cols());
        Mat<T> dh = Mat<T>::Zero(R, H);
        Mat<T> dgi(R, 3 * H), dgh(R, 3 * H);
        Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dn_pre(R, H), dz_pre(R, H), dr_pre(R, H);
        Mat<T> carry(R, H);
        for (Eigen::Index t = steps - 1; t >= 0; --t) {
          dh += g.middleCols(t * H, H);
          const auto r = r_all.middleRows(t * R, R).array();
          const auto z = z_all.middleRows(t * R, R).array();
          const auto n = n_all.middleRows(t * R, R).array();
          const auto hn = hn_all.middleRows(t * R, R).array();
          const auto h_prev = t > 0 ? h_all.middleRows((t - 1) * R, R) : h0v.middleRows(0, R);
          const auto dha = dh.array();
          dn_pre = dha * (T(1) - z) * (T(1) - n.square());
          dz_pre = dha * (h_prev.array() - n) * z * (T(1) - z);
          dr_pre = dn_pre * hn * r * (T(1) - r);
          dgi.leftCols(H) = dr_pre.matrix();
          dgi.middleCols(H, H) = dz_pre.matrix();
          dgi.rightCols(H) = dn_pre.matrix();
          dgh.leftCols(2 * H) = dgi.leftCols(2 * H);
          dgh.rightCols(H) = (dn_pre * r).matrix();

          if (repeat_input) {
            dWi.noalias() += x.transpose() * dgi;
            if (want_x) dx.noalias() += dgi * Wi.transpose();
          } else {
            dWi.noalias() += x.middleCols(t * in, in).transpose() * dgi;
            if (want_x) dx.middleCols(t * in, in).noalias() = dgi * Wi.transpose();
          }
          dbi += dgi.colwise().sum();
          dWh.noalias() += h_prev.transpose() * dgh;
          dbh += dgh.colwise().sum();
          carry.array() = dha * z;
          carry.noalias() += dgh * Wh.transpose();
          dh.swap(carry);
        }
        if (want_x) tp.accumulate(ix, dx);
        tp.accumulate(ih0, dh);
        tp.accumulate(iwi, dWi);
        tp.accumulate(iwh, dWh);
        tp.accumulate(ibi, dbi);
        tp.accumulate(ibh, dbh);
      });
}

}  // namespace dgc::ad
