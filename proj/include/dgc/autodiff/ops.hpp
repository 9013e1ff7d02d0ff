#pragma once

// Differentiable building blocks. Every op computes its value eagerly and
// registers a closure computing vector-Jacobian products for its parents.

#include "dgc/autodiff/tape.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace dgc::ad {

namespace detail {
template <typename T>
void check_same(const Var<T>& a, const Var<T>& b, const char* op) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                std::string(op) + ": operand shapes differ (" + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()) + ")");
}
}  // namespace detail

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_shape(a.cols() == b.rows(), "matmul: inner dimensions differ (" + std::to_string(a.cols()) +
                                          " vs " + std::to_string(b.rows()) + ")");
  Mat<T> out;
  out.noalias() = a.value() * b.value();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    if (t.needs_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

/// x * W + b with W: in x out, b: 1 x out.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::check_same(a, b, "add");
  Mat<T> out = a.value() + b.value();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::check_same(a, b, "sub");
  Mat<T> out = a.value() - b.value();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

/// alpha * a + beta * b
template <typename T>
Var<T> mix(const Var<T>& a, const Var<T>& b, T alpha, T beta) {
  detail::check_same(a, b, "mix");
  Mat<T> out = alpha * a.value() + beta * b.value();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(out), {a, b},
                      [ia, ib, alpha, beta](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
                        t.accumulate(ia, alpha * g);
                        t.accumulate(ib, beta * g);
                      });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Mat<T> out = s * a.value();
  const int ia = a.id;
  return a.tape->make(std::move(out), {a},
                      [ia, s](Tape<T>& t, const Mat<T>& g, const Mat<T>&) { t.accumulate(ia, s * g); });
}

/// x + broadcast(bias) where bias is 1 x cols.
template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& bias) {
  require_shape(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias: bias must be 1 x cols");
  Mat<T> out = x.value().rowwise() + bias.value().row(0);
  const int ix = x.id, ib = bias.id;
  return x.tape->make(std::move(out), {x, bias}, [ix, ib](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ix, g);
    if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  return add_bias(matmul(x, weight), bias);
}

/// Row r of x gets row (r % period) of `table` added (learned positional tables).
template <typename T>
Var<T> add_tiled(const Var<T>& x, const Var<T>& table) {
  const Eigen::Index period = table.rows();
  require_shape(table.cols() == x.cols() && period > 0 && x.rows() % period == 0,
                "add_tiled: table must tile the rows of x");
  Mat<T> out = x.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) += table.value().row(r % period);
  const int ix = x.id, it = table.id;
  return x.tape->make(std::move(out), {x, table}, [ix, it, period](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ix, g);
    if (t.needs_grad(it)) {
      Mat<T> gt = Mat<T>::Zero(period, g.cols());
      for (Eigen::Index r = 0; r < g.rows(); ++r) gt.row(r % period) += g.row(r);
      t.accumulate(it, gt);
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Mat<T> out = x.value().cwiseMax(T(0));
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix](Tape<T>& t, const Mat<T>& g, const Mat<T>& y) {
    t.accumulate(ix, (y.array() > T(0)).select(g, T(0)));
  });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
  Mat<T> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const T m = x.value().row(r).maxCoeff();
    out.row(r) = (x.value().row(r).array() - m).exp();
    out.row(r) /= out.row(r).sum();
  }
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix](Tape<T>& t, const Mat<T>& g, const Mat<T>& y) {
    const auto dots = (g.array() * y.array()).rowwise().sum().eval();
    t.accumulate(ix, (y.array() * (g.array().colwise() - dots)).matrix());
  });
}

/// Row-wise layer normalisation with learned gain/shift (both 1 x cols).
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& shift, T eps = T(1e-5)) {
  const Eigen::Index d = x.cols();
  require_shape(gain.rows() == 1 && gain.cols() == d && shift.rows() == 1 && shift.cols() == d,
                "layer_norm: gain/shift must be 1 x cols");
  const auto& xv = x.value();
  Mat<T> xhat(xv.rows(), d);
  Vec<T> inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const T mean = xv.row(r).mean();
    const T var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Mat<T> out = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() + shift.value().row(0).array();
  const int ix = x.id, ig = gain.id, is = shift.id;
  return x.tape->make(std::move(out), {x, gain, shift},
                      [ix, ig, is, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                          Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
                        if (t.needs_grad(ig)) t.accumulate(ig, (g.array() * xhat.array()).colwise().sum().matrix());
                        if (t.needs_grad(is)) t.accumulate(is, g.colwise().sum());
                        if (t.needs_grad(ix)) {
                          const Mat<T> dxhat = g.array().rowwise() * t.value(ig).row(0).array();
                          const auto m1 = dxhat.rowwise().mean().eval();
                          const auto m2 = (dxhat.array() * xhat.array()).rowwise().mean().eval();
                          Mat<T> dx = dxhat.array().colwise() - m1.array();
                          dx.array() -= xhat.array().colwise() * m2.array();
                          dx.array().colwise() *= inv_std.array();
                          t.accumulate(ix, dx);
                        }
                      });
}

/// Inverted dropout. Identity (same node) when p == 0 or rng is null.
template <typename T>
Var<T> dropout(const Var<T>& x, T p, std::mt19937_64* rng) {
  if (rng == nullptr || p <= T(0)) return x;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(p));
  Mat<T> m(x.rows(), x.cols());
  const T s = T(1) / (T(1) - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = keep(*rng) ? s : T(0);
  Mat<T> out = x.value().cwiseProduct(m);
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix, m = std::move(m)](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ix, g.cwiseProduct(m));
  });
}

/// Reinterpret the row-major buffer with a new shape.
template <typename T>
Var<T> reshape(const Var<T>& x, Eigen::Index rows, Eigen::Index cols) {
  require_shape(rows * cols == x.rows() * x.cols(), "reshape: element count changes");
  const Eigen::Index r0 = x.rows(), c0 = x.cols();
  Mat<T> out = Eigen::Map<const Mat<T>>(x.value().data(), rows, cols);
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix, r0, c0](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ix, Eigen::Map<const Mat<T>>(g.data(), r0, c0));
  });
}

/// Columns [start, start + count).
template <typename T>
Var<T> col_block(const Var<T>& x, Eigen::Index start, Eigen::Index count) {
  require_shape(start >= 0 && count > 0 && start + count <= x.cols(), "col_block: out of range");
  Mat<T> out = x.value().middleCols(start, count);
  const Eigen::Index r0 = x.rows(), c0 = x.cols();
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix, r0, c0, start, count](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    Mat<T> full = Mat<T>::Zero(r0, c0);
    full.middleCols(start, count) = g;
    t.accumulate(ix, full);
  });
}

/// Row r comes from `updated` when use_updated[r] != 0, else from `original`.
template <typename T>
Var<T> select_rows(const Var<T>& updated, const Var<T>& original, const std::vector<std::uint8_t>& use_updated) {
  detail::check_same(updated, original, "select_rows");
  require_shape(static_cast<Eigen::Index>(use_updated.size()) == updated.rows(), "select_rows: selector length");
  Mat<T> out = original.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    if (use_updated[r]) out.row(r) = updated.value().row(r);
  const int iu = updated.id, io = original.id;
  return updated.tape->make(std::move(out), {updated, original},
                            [iu, io, use_updated](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
                              Mat<T> gu = g, go = g;
                              for (Eigen::Index r = 0; r < g.rows(); ++r) {
                                if (use_updated[r]) go.row(r).setZero();
                                else gu.row(r).setZero();
                              }
                              t.accumulate(iu, gu);
                              t.accumulate(io, go);
                            });
}

/// out = x .* scale(row) + shift(row) with constant per-row scale/shift.
template <typename T>
Var<T> row_affine(const Var<T>& x, const Vec<T>& scale_rows, const Vec<T>& shift_rows) {
  require_shape(scale_rows.size() == x.rows() && shift_rows.size() == x.rows(), "row_affine: vector length");
  Mat<T> out = (x.value().array().colwise() * scale_rows.array()).colwise() + shift_rows.array();
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix, scale_rows](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    t.accumulate(ix, (g.array().colwise() * scale_rows.array()).matrix());
  });
}

/// Left-multiplies every consecutive block of `group` rows by the constant
/// group x group matrix `op` (graph propagation shared across windows).
template <typename T>
Var<T> group_left_multiply(const Var<T>& x, const Mat<T>& op) {
  const Eigen::Index g = op.rows();
  require_shape(op.cols() == g && g > 0 && x.rows() % g == 0, "group_left_multiply: rows not a multiple of group");
  Mat<T> out(x.rows(), x.cols());
  for (Eigen::Index b = 0; b < x.rows() / g; ++b) out.middleRows(b * g, g).noalias() = op * x.value().middleRows(b * g, g);
  const int ix = x.id;
  return x.tape->make(std::move(out), {x}, [ix, op, g](Tape<T>& t, const Mat<T>& gr, const Mat<T>&) {
    Mat<T> dx(gr.rows(), gr.cols());
    for (Eigen::Index b = 0; b < gr.rows() / g; ++b)
      dx.middleRows(b * g, g).noalias() = op.transpose() * gr.middleRows(b * g, g);
    t.accumulate(ix, dx);
  });
}

/// s * sum((a - b)^2) as a 1x1 node.
template <typename T>
Var<T> scaled_sq_error(const Var<T>& a, const Var<T>& b, T s) {
  detail::check_same(a, b, "scaled_sq_error");
  Mat<T> out(1, 1);
  out(0, 0) = s * (a.value() - b.value()).squaredNorm();
  const int ia = a.id, ib = b.id;
  return a.tape->make(std::move(out), {a, b}, [ia, ib, s](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    const Mat<T> d = (T(2) * s * g(0, 0)) * (t.value(ia) - t.value(ib));
    t.accumulate(ia, d);
    t.accumulate(ib, -d);
  });
}

/// sum_k w_k * s_k over 1x1 nodes.
template <typename T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& weights) {
  require_shape(!terms.empty() && terms.size() == weights.size(), "weighted_sum: terms/weights mismatch");
  Mat<T> out = Mat<T>::Zero(1, 1);
  for (std::size_t k = 0; k < terms.size(); ++k) {
    require_shape(terms[k].rows() == 1 && terms[k].cols() == 1, "weighted_sum: terms must be scalars");
    out(0, 0) += weights[k] * terms[k].scalar();
  }
  std::vector<int> ids;
  for (const auto& v : terms) ids.push_back(v.id);
  return terms.front().tape->make(std::move(out), terms, [ids, weights](Tape<T>& t, const Mat<T>& g, const Mat<T>&) {
    for (std::size_t k = 0; k < ids.size(); ++k)
      if (weights[k] != T(0)) t.accumulate(ids[k], weights[k] * g);
  });
}

}  // namespace dgc::ad
