#pragma once

#include "dgc/autodiff/tape.hpp"

#include <cmath>
#include <string>

namespace dgc::ad {

/// Describes how token sequences are laid out in the rows of a projection
/// matrix. Token k of sequence s lives in row
///   (s / inner_count) * outer_block + (s % inner_count) * inner_step + k * stride.
///
/// Temporal attention over patches: rows are ordered [series][patch], so a
/// sequence is `length` consecutive rows. Channel attention at a fixed patch
/// position takes every C-th row of a window block.
struct SeqLayout {
  Eigen::Index count = 0;
  Eigen::Index length = 0;
  Eigen::Index stride = 1;
  Eigen::Index inner_count = 1;
  Eigen::Index outer_block = 0;
  Eigen::Index inner_step = 0;

  Eigen::Index base(Eigen::Index s) const { return (s / inner_count) * outer_block + (s % inner_count) * inner_step; }

  /// `count` sequences of `length` contiguous rows.
  static SeqLayout contiguous(Eigen::Index count, Eigen::Index length) {
    return {count, length, 1, 1, length, 0};
  }

  /// Rows ordered [window][channel][patch]; one sequence per (window, patch)
  /// whose tokens are the channels.
  static SeqLayout across_channels(Eigen::Index windows, Eigen::Index channels, Eigen::Index patches) {
    return {windows * patches, channels, patches, patches, channels * patches, 1};
  }

  Eigen::Index rows_covered() const { return count * length; }
};

namespace detail {
template <typename T>
using StridedMap = Eigen::Map<const Mat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using StridedMutMap = Eigen::Map<Mat<T>, 0, Eigen::OuterStride<>>;
}  // namespace detail

/// Multi-head scaled dot-product attention core:
///   out_h = softmax(Q_h K_h^T / sqrt(d_head) + bias) V_h   per sequence.
/// q, k, v are (rows x d_model) projections; heads split the columns.
/// `bias` is an optional length x length additive term (masking uses a
/// large negative value). If `weights_out` is non-null it receives the
/// attention probabilities stacked as (count * heads * length) x length.
template <typename T>
Var<T> multi_head_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, const SeqLayout& layout,
                            Eigen::Index heads, const Mat<T>* bias = nullptr, Mat<T>* weights_out = nullptr) {
  const Eigen::Index d_model = q.cols();
  require_shape(k.rows() == q.rows() && v.rows() == q.rows() && k.cols() == d_model && v.cols() == d_model,
                "attention: q/k/v shapes differ");
  require_shape(heads > 0 && d_model % heads == 0, "attention: d_model not divisible by heads");
  require_shape(layout.rows_covered() == q.rows(), "attention: layout does not cover all rows (" +
                                                       std::to_string(layout.rows_covered()) + " vs " +
                                                       std::to_string(q.rows()) + ")");
  const Eigen::Index len = layout.length;
  if (bias) require_shape(bias->rows() == len && bias->cols() == len, "attention: bias must be length x length");
  const Eigen::Index dh = d_model / heads;
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
  const Eigen::Index row_stride = layout.stride * d_model;

  Mat<T> out(q.rows(), d_model);
  Mat<T> probs(layout.count * heads * len, len);
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  Mat<T> scores(len, len);
  for (Eigen::Index s = 0; s < layout.count; ++s) {
    const Eigen::Index base = layout.base(s);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Eigen::Index off = base * d_model + h * dh;
      detail::StridedMap<T> qs(qv.data() + off, len, dh, Eigen::OuterStride<>(row_stride));
      detail::StridedMap<T> ks(kv.data() + off, len, dh, Eigen::OuterStride<>(row_stride));
      detail::StridedMap<T> vs(vv.data() + off, len, dh, Eigen::OuterStride<>(row_stride));
      scores.noalias() = inv_sqrt * (qs * ks.transpose());
      if (bias) scores += *bias;
      auto a = probs.middleRows((s * heads + h) * len, len);
      for (Eigen::Index r = 0; r < len; ++r) {
        const T m = scores.row(r).maxCoeff();
        a.row(r) = (scores.row(r).array() - m).exp();
        a.row(r) /= a.row(r).sum();
      }
      detail::StridedMutMap<T> os(out.data() + off, len, dh, Eigen::OuterStride<>(row_stride));
      os.noalias() = a * vs;
    }
  }
  if (weights_out) *weights_out = probs;

  const int iq = q.id, ik = k.id, iv = v.id;
  return q.tape->make(
      std::move(out), {q, k, v},
      [iq, ik, iv, layout, heads, dh, inv_sqrt, row_stride, d_model, len, probs = std::move(probs)](
          Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
        const auto& qv = t.value(iq);
        const auto& kv = t.value(ik);
        const auto& vv = t.value(iv);
        Mat<T> dq = Mat<T>::Zero(qv.rows(), d_model);
        Mat<T> dk = Mat<T>::Zero(qv.rows(), d_model);
        Mat<T> dv = Mat<T>::Zero(qv.rows(), d_model);
        Mat<T> da(len, len), ds(len, len);
        for (Eigen::Index s = 0; s < layout.count; ++s) {
          const Eigen::Index base = layout.base(s);
          for (Eigen::Index h = 0; h < heads; ++h) {
            const Eigen::Index off = base * d_model + h * dh;
            const Eigen::OuterStride<> os(row_stride);
            detail::StridedMap<T> qs(qv.data() + off, len, dh, os);
            detail::StridedMap<T> ks(kv.data() + off, len, dh, os);
            detail::StridedMap<T> vs(vv.data() + off, len, dh, os);
            detail::StridedMap<T> gs(g.data() + off, len, dh, os);
            detail::StridedMutMap<T> dqs(dq.data() + off, len, dh, os);
            detail::StridedMutMap<T> dks(dk.data() + off, len, dh, os);
            detail::StridedMutMap<T> dvs(dv.data() + off, len, dh, os);
            const auto a = probs.middleRows((s * heads + h) * len, len);
            dvs.noalias() += a.transpose() * gs;
            da.noalias() = gs * vs.transpose();
            const auto dots = (da.array() * a.array()).rowwise().sum().eval();
            ds = (a.array() * (da.array().colwise() - dots)).matrix() * inv_sqrt;
            dqs.noalias() += ds * ks;
            dks.noalias() += ds.transpose() * qs;
          }
        }
        t.accumulate(iq, dq);
        t.accumulate(ik, dk);
        t.accumulate(iv, dv);
      });
}

}  // namespace dgc::ad
