#include "dgc/autodiff/attention_op.hpp"
#include "dgc/autodiff/gru_op.hpp"
#include "dgc/autodiff/ops.hpp"
#include "support/gradcheck.hpp"

#include <catch_amalgamated.hpp>

using namespace dgc;
using dgc::testing::check_gradients;
using dgc::testing::random_matrix;

namespace {

// Reduces any node to a scalar with a fixed random projection so every
// output element carries a distinct weight.
ad::Var<double> probe(const ad::Var<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MatD target = random_matrix(y.rows(), y.cols(), rng);
  return ad::scaled_sq_error(y, y.tape->constant(target), 0.5);
}

}  // namespace

TEST_CASE("matmul, add, sub, mix and scale gradients", "[autodiff]") {
  std::mt19937_64 rng(1);
  ad::ParameterSet<double> ps;
  auto& a = ps.add("a", random_matrix(3, 4, rng));
  auto& b = ps.add("b", random_matrix(4, 2, rng));
  auto& c = ps.add("c", random_matrix(3, 2, rng));
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto ab = ad::matmul(t.param(a), t.param(b));
    auto y = ad::mix(ad::add(ab, t.param(c)), ad::sub(ab, t.param(c)), 0.3, -1.7);
    return probe(ad::scale(y, 2.5), 7);
  });
  CHECK(r.relative_error < 1e-7);
}

TEST_CASE("linear, relu, softmax and layer norm gradients", "[autodiff]") {
  std::mt19937_64 rng(2);
  ad::ParameterSet<double> ps;
  auto& x = ps.add("x", random_matrix(5, 4, rng));
  auto& w = ps.add("w", random_matrix(4, 6, rng));
  auto& b = ps.add("b", random_matrix(1, 6, rng));
  auto& gain = ps.add("gain", random_matrix(1, 6, rng));
  auto& shift = ps.add("shift", random_matrix(1, 6, rng));
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto h = ad::relu(ad::linear(t.param(x), t.param(w), t.param(b)));
    auto n = ad::layer_norm(ad::add(h, ad::linear(t.param(x), t.param(w), t.param(b))), t.param(gain), t.param(shift));
    return probe(ad::softmax_rows(n), 3);
  });
  CHECK(r.relative_error < 1e-6);
}

TEST_CASE("layout ops gradients", "[autodiff]") {
  std::mt19937_64 rng(3);
  ad::ParameterSet<double> ps;
  auto& x = ps.add("x", random_matrix(6, 4, rng));
  auto& y = ps.add("y", random_matrix(6, 4, rng));
  auto& table = ps.add("table", random_matrix(3, 4, rng));
  const MatD op = random_matrix(3, 3, rng);
  VecD sc = random_matrix(6, 1, rng);
  VecD sh = random_matrix(6, 1, rng);
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto z = ad::add_tiled(t.param(x), t.param(table));
    z = ad::select_rows(z, t.param(y), {1, 0, 1, 1, 0, 0});
    z = ad::group_left_multiply(z, op);
    z = ad::row_affine(z, sc, sh);
    z = ad::reshape(z, 3, 8);
    return probe(ad::col_block(z, 2, 5), 5);
  });
  CHECK(r.relative_error < 1e-7);
}

TEST_CASE("weighted_sum gradients", "[autodiff]") {
  std::mt19937_64 rng(4);
  ad::ParameterSet<double> ps;
  auto& x = ps.add("x", random_matrix(2, 3, rng));
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto a = probe(t.param(x), 1);
    auto b = probe(ad::relu(t.param(x)), 2);
    return ad::weighted_sum<double>({a, b}, {0.1, 1.0});
  });
  CHECK(r.relative_error < 1e-7);
}

TEST_CASE("dropout keeps expectation and is identity when off", "[autodiff]") {
  ad::Tape<double> t;
  auto x = t.constant(MatD::Ones(200, 50));
  auto same = ad::dropout(x, 0.2, static_cast<std::mt19937_64*>(nullptr));
  CHECK(same.id == x.id);
  std::mt19937_64 rng(9);
  auto d = ad::dropout(x, 0.2, &rng);
  CHECK(d.value().mean() == Catch::Approx(1.0).margin(0.03));
}

TEST_CASE("gru sequence gradients, per-step and repeated input", "[autodiff][gru]") {
  std::mt19937_64 rng(5);
  const Eigen::Index R = 3, H = 4, steps = 5;
  ad::ParameterSet<double> ps;
  auto& x = ps.add("x", random_matrix(R, steps * 2, rng));
  auto& h0 = ps.add("h0", random_matrix(R, H, rng, 0.5));
  auto& wi = ps.add("wi", random_matrix(2, 3 * H, rng, 0.5));
  auto& wh = ps.add("wh", random_matrix(H, 3 * H, rng, 0.5));
  auto& bi = ps.add("bi", random_matrix(1, 3 * H, rng, 0.5));
  auto& bh = ps.add("bh", random_matrix(1, 3 * H, rng, 0.5));
  auto& xr = ps.add("xr", random_matrix(R, 2, rng));
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto s1 = ad::gru_sequence(t.param(x), steps, false, t.param(h0), t.param(wi), t.param(wh), t.param(bi),
                               t.param(bh));
    auto s2 = ad::gru_sequence(t.param(xr), steps, true, t.param(h0), t.param(wi), t.param(wh), t.param(bi),
                               t.param(bh));
    return ad::weighted_sum<double>({probe(s1, 1), probe(s2, 2)}, {1.0, 1.0});
  });
  CHECK(r.relative_error < 1e-7);
}

TEST_CASE("gru matches a hand-unrolled single step", "[autodiff][gru]") {
  std::mt19937_64 rng(6);
  const MatD x = random_matrix(2, 1, rng), h0 = random_matrix(2, 3, rng);
  const MatD wi = random_matrix(1, 9, rng), wh = random_matrix(3, 9, rng);
  const MatD bi = random_matrix(1, 9, rng), bh = random_matrix(1, 9, rng);
  ad::Tape<double> t;
  auto s = ad::gru_sequence(t.constant(x), 1, false, t.constant(h0), t.constant(wi), t.constant(wh), t.constant(bi),
                            t.constant(bh));
  auto sig = [](double v) { return 1 / (1 + std::exp(-v)); };
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) {
      double gi[3], gh[3];
      for (int g = 0; g < 3; ++g) {
        gi[g] = x(i, 0) * wi(0, g * 3 + j) + bi(0, g * 3 + j);
        gh[g] = bh(0, g * 3 + j);
        for (int k = 0; k < 3; ++k) gh[g] += h0(i, k) * wh(k, g * 3 + j);
      }
      const double r = sig(gi[0] + gh[0]), z = sig(gi[1] + gh[1]);
      const double n = std::tanh(gi[2] + r * gh[2]);
      CHECK(s.value()(i, j) == Catch::Approx((1 - z) * n + z * h0(i, j)).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention gradients over contiguous and channel layouts", "[autodiff][attention]") {
  std::mt19937_64 rng(7);
  const Eigen::Index windows = 2, channels = 3, patches = 2, d = 4;
  const Eigen::Index rows = windows * channels * patches;
  ad::ParameterSet<double> ps;
  auto& q = ps.add("q", random_matrix(rows, d, rng));
  auto& k = ps.add("k", random_matrix(rows, d, rng));
  auto& v = ps.add("v", random_matrix(rows, d, rng));
  MatD bias = MatD::Zero(channels, channels);
  bias(0, 2) = bias(2, 0) = bias(1, 2) = bias(2, 1) = -1e9;
  auto r = check_gradients(ps, [&](ad::Tape<double>& t) {
    auto a = ad::multi_head_attention(t.param(q), t.param(k), t.param(v),
                                      ad::SeqLayout::contiguous(windows * channels, patches), 2);
    auto b = ad::multi_head_attention(t.param(q), t.param(k), t.param(v),
                                      ad::SeqLayout::across_channels(windows, channels, patches), 2, &bias);
    return ad::weighted_sum<double>({probe(a, 1), probe(b, 2)}, {1.0, 1.0});
  });
  CHECK(r.relative_error < 1e-7);
}

TEST_CASE("attention probabilities sum to one and respect the mask", "[autodiff][attention]") {
  std::mt19937_64 rng(8);
  const Eigen::Index windows = 2, channels = 3, patches = 4, d = 8, heads = 2;
  const Eigen::Index rows = windows * channels * patches;
  ad::Tape<double> t;
  auto q = t.constant(random_matrix(rows, d, rng));
  MatD bias = MatD::Zero(channels, channels);
  bias(0, 2) = bias(2, 0) = -1e9;
  MatD probs;
  ad::multi_head_attention(q, q, q, ad::SeqLayout::across_channels(windows, channels, patches), heads, &bias, &probs);
  REQUIRE(probs.rows() == windows * patches * heads * channels);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) CHECK(probs.row(r).sum() == Catch::Approx(1.0).margin(1e-12));
  for (Eigen::Index blk = 0; blk < probs.rows() / channels; ++blk) {
    CHECK(probs(blk * channels + 0, 2) == 0.0);
    CHECK(probs(blk * channels + 2, 0) == 0.0);
  }
}

TEST_CASE("attention against a direct per-sequence evaluation", "[autodiff][attention]") {
  std::mt19937_64 rng(10);
  const Eigen::Index windows = 1, channels = 3, patches = 2, d = 4;
  const MatD q = random_matrix(6, d, rng), k = random_matrix(6, d, rng), v = random_matrix(6, d, rng);
  ad::Tape<double> t;
  auto out = ad::multi_head_attention(t.constant(q), t.constant(k), t.constant(v),
                                      ad::SeqLayout::across_channels(windows, channels, patches), 1);
  for (Eigen::Index c = 0; c < patches; ++c) {
    MatD qs(channels, d), ks(channels, d), vs(channels, d);
    for (Eigen::Index i = 0; i < channels; ++i) {
      qs.row(i) = q.row(i * patches + c);
      ks.row(i) = k.row(i * patches + c);
      vs.row(i) = v.row(i * patches + c);
    }
    MatD s = qs * ks.transpose() / 2.0;
    for (Eigen::Index i = 0; i < channels; ++i) {
      s.row(i) = s.row(i).array().exp();
      s.row(i) /= s.row(i).sum();
    }
    const MatD expect = s * vs;
    for (Eigen::Index i = 0; i < channels; ++i)
      CHECK((out.value().row(i * patches + c) - expect.row(i)).norm() < 1e-12);
  }
}
