#pragma once

// Self-training clustering objective: Student-t soft assignments of latent
// codes to centres, the sharpened target distribution, and the KL term that
// lets the target supervise the graph network's distribution.

#include "dgc/autodiff/tape.hpp"
#include "dgc/core/errors.hpp"
#include "dgc/core/types.hpp"

#include <cmath>
#include <string>

namespace dgc::cluster {

struct ClusterCenters {
  MatD mu;          // n x l2
  double t = 1.0;   // Student-t degrees of freedom
};

inline constexpr double kLogFloor = 1e-12;

/// q_ij = (1 + |h_i - mu_j|^2 / t)^(-(t+1)/2), normalised over j.
template <typename T>
Mat<T> soft_assignment(const Mat<T>& h, const Mat<T>& mu, T t = T(1)) {
  require_shape(h.cols() == mu.cols(), "soft_assignment: latent width " + std::to_string(h.cols()) +
                                           " vs centre width " + std::to_string(mu.cols()));
  require_shape(mu.rows() >= 1, "soft_assignment: need at least one centre");
  if (!(t > T(0))) throw ShapeMismatch("soft_assignment: t must be positive");
  const T expo = -(t + T(1)) / T(2);
  Mat<T> q(h.rows(), mu.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    for (Eigen::Index j = 0; j < mu.rows(); ++j) {
      const T d = (h.row(i) - mu.row(j)).squaredNorm();
      q(i, j) = std::pow(T(1) + d / t, expo);
    }
    q.row(i) /= q.row(i).sum();
  }
  return q;
}

/// p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j'), f_j = sum_i q_ij where the
/// sum over i runs within each consecutive block of `group` rows (a window's
/// channels). group <= 0 means all rows form one block.
template <typename T>
Mat<T> target_distribution(const Mat<T>& q, Eigen::Index group = 0) {
  const Eigen::Index g = group > 0 ? group : q.rows();
  require_shape(g > 0 && q.rows() % g == 0, "target_distribution: rows not a multiple of group");
  Mat<T> p(q.rows(), q.cols());
  for (Eigen::Index b = 0; b < q.rows() / g; ++b) {
    const auto qb = q.middleRows(b * g, g);
    const RowVec<T> f = qb.colwise().sum();
    for (Eigen::Index j = 0; j < f.size(); ++j)
      if (!(f(j) > T(0)))
        throw DegenerateCluster("target_distribution: cluster " + std::to_string(j) + " has zero total assignment");
    auto pb = p.middleRows(b * g, g);
    pb = qb.array().square().rowwise() / f.array();
    pb.array().colwise() /= pb.rowwise().sum().array();
  }
  return p;
}

/// sum_ij p_ij log(p_ij / max(g_ij, floor)), with 0 log 0 = 0.
template <typename T>
T kl_divergence(const Mat<T>& p, const Mat<T>& g, T floor = T(kLogFloor)) {
  require_shape(p.rows() == g.rows() && p.cols() == g.cols(), "kl_divergence: shapes differ");
  T total = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const T pi = p.data()[i];
    if (pi > T(0)) total += pi * (std::log(pi) - std::log(std::max(g.data()[i], floor)));
  }
  return total;
}

/// (1 / 2N) * |x_rec - x|_F^2 for one N-row window.
template <typename T>
T reconstruction_loss(const Mat<T>& x, const Mat<T>& x_rec) {
  require_shape(x.rows() == x_rec.rows() && x.cols() == x_rec.cols(), "reconstruction_loss: shapes differ");
  require_shape(x.rows() > 0, "reconstruction_loss: empty input");
  return (x_rec - x).squaredNorm() / (T(2) * static_cast<T>(x.rows()));
}

// ---------------------------------------------------------------------------
// Differentiable versions.

template <typename T>
ad::Var<T> soft_assignment(const ad::Var<T>& h, const ad::Var<T>& mu, T t = T(1)) {
  Mat<T> q = soft_assignment<T>(h.value(), mu.value(), t);
  const int ih = h.id, im = mu.id;
  return h.tape->make(std::move(q), {h, mu}, [ih, im, t](ad::Tape<T>& tp, const Mat<T>& dq, const Mat<T>& q) {
    const auto& hv = tp.value(ih);
    const auto& mv = tp.value(im);
    const T expo = -(t + T(1)) / T(2);
    // q = softmax_j(expo * log(1 + d_ij / t))
    const auto dots = (dq.array() * q.array()).rowwise().sum().eval();
    const Mat<T> dlog = (q.array() * (dq.array().colwise() - dots)).matrix();
    Mat<T> dh = Mat<T>::Zero(hv.rows(), hv.cols());
    Mat<T> dmu = Mat<T>::Zero(mv.rows(), mv.cols());
    for (Eigen::Index i = 0; i < hv.rows(); ++i) {
      for (Eigen::Index j = 0; j < mv.rows(); ++j) {
        const RowVec<T> diff = hv.row(i) - mv.row(j);
        const T dd = dlog(i, j) * expo / (t + diff.squaredNorm());
        dh.row(i) += T(2) * dd * diff;
        dmu.row(j) -= T(2) * dd * diff;
      }
    }
    tp.accumulate(ih, dh);
    tp.accumulate(im, dmu);
  });
}

template <typename T>
ad::Var<T> target_distribution(const ad::Var<T>& q, Eigen::Index group) {
  Mat<T> p = target_distribution<T>(q.value(), group);
  const int iq = q.id;
  const Eigen::Index g = group > 0 ? group : q.rows();
  return q.tape->make(std::move(p), {q}, [iq, g](ad::Tape<T>& tp, const Mat<T>& dp, const Mat<T>& p) {
    const auto& qv = tp.value(iq);
    Mat<T> dq(qv.rows(), qv.cols());
    for (Eigen::Index b = 0; b < qv.rows() / g; ++b) {
      const auto qb = qv.middleRows(b * g, g);
      const auto pb = p.middleRows(b * g, g);
      const auto dpb = dp.middleRows(b * g, g);
      const RowVec<T> f = qb.colwise().sum();
      // w_ij = q_ij^2 / f_j and p = w / rowsum(w).
      const Mat<T> w = qb.array().square().rowwise() / f.array();
      const Vec<T> wsum = w.rowwise().sum();
      const auto dots = (dpb.array() * pb.array()).rowwise().sum().eval();
      const Mat<T> dw = ((dpb.array().colwise() - dots).colwise() / wsum.array()).matrix();
      auto dqb = dq.middleRows(b * g, g);
      dqb = (T(2) * dw.array() * qb.array()).rowwise() / f.array();
      const RowVec<T> df = -((dw.array() * w.array()).colwise().sum() / f.array()).matrix();
      dqb.rowwise() += df;
    }
    tp.accumulate(iq, dq);
  });
}

/// s * KL(P || G) as a 1x1 node; gradients reach both arguments.
template <typename T>
ad::Var<T> kl_divergence(const ad::Var<T>& p, const ad::Var<T>& g, T s, T floor = T(kLogFloor)) {
  Mat<T> out(1, 1);
  out(0, 0) = s * kl_divergence<T>(p.value(), g.value(), floor);
  const int ip = p.id, ig = g.id;
  return p.tape->make(std::move(out), {p, g}, [ip, ig, s, floor](ad::Tape<T>& tp, const Mat<T>& d, const Mat<T>&) {
    const auto& pv = tp.value(ip);
    const auto& gv = tp.value(ig);
    const T scale = s * d(0, 0);
    Mat<T> dp = Mat<T>::Zero(pv.rows(), pv.cols());
    Mat<T> dg = Mat<T>::Zero(gv.rows(), gv.cols());
    for (Eigen::Index i = 0; i < pv.size(); ++i) {
      const T pi = pv.data()[i];
      if (!(pi > T(0))) continue;
      const T gi = gv.data()[i];
      const T gc = std::max(gi, floor);
      dp.data()[i] = scale * (std::log(pi) - std::log(gc) + T(1));
      if (gi >= floor) dg.data()[i] = -scale * pi / gi;
    }
    tp.accumulate(ip, dp);
    tp.accumulate(ig, dg);
  });
}

}  // namespace dgc::cluster
