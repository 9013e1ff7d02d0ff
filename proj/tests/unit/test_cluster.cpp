#include "dgc/cluster/dec.hpp"
#include "dgc/cluster/dtw.hpp"
#include "dgc/cluster/gcl.hpp"
#include "dgc/cluster/graph.hpp"
#include "dgc/cluster/kmeans.hpp"
#include "dgc/cluster/rfl.hpp"
#include "dgc/train/objective.hpp"
#include "support/gradcheck.hpp"

#include <catch_amalgamated.hpp>

#include <numeric>
#include <set>

using namespace dgc;
using namespace dgc::cluster;
using Catch::Approx;
using dgc::testing::random_matrix;

TEST_CASE("soft assignment examples", "[cluster][dec]") {
  MatD h(1, 1), mu(2, 1);
  h << 0;
  mu << 0, 1;
  const MatD q = soft_assignment<double>(h, mu);
  CHECK(q(0, 0) == Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(q(0, 1) == Approx(1.0 / 3.0).epsilon(1e-14));

  std::mt19937_64 rng(1);
  const MatD h5 = random_matrix(5, 3, rng);
  const MatD one = soft_assignment<double>(h5, random_matrix(1, 3, rng));
  CHECK(one.isOnes(0));

  MatD eq(3, 2);  // origin is equidistant from all three centres
  eq << 1, 0, -1, 0, 0, 1;
  const MatD u = soft_assignment<double>(MatD::Zero(1, 2), eq);
  for (int j = 0; j < 3; ++j) CHECK(u(0, j) == Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("target distribution examples", "[cluster][dec]") {
  MatD q(2, 2);
  q << 0.8, 0.2, 0.6, 0.4;
  const MatD p = target_distribution<double>(q);
  CHECK(p(0, 0) == Approx(0.8727).margin(5e-5));
  CHECK(p(0, 1) == Approx(0.1273).margin(5e-5));
  CHECK(p(1, 0) == Approx(0.4909).margin(5e-5));
  CHECK(p(1, 1) == Approx(0.5091).margin(5e-5));

  MatD onehot(3, 2);
  onehot << 1, 0, 0, 1, 1, 0;
  CHECK(target_distribution<double>(onehot) == onehot);

  const MatD uniform = MatD::Constant(4, 3, 1.0 / 3.0);
  CHECK((target_distribution<double>(uniform) - uniform).cwiseAbs().maxCoeff() < 1e-15);

  MatD empty(2, 2);
  empty << 1, 0, 1, 0;
  CHECK_THROWS_AS(target_distribution<double>(empty), DegenerateCluster);
}

TEST_CASE("target distribution sharpens balanced assignments", "[cluster][dec][property]") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  auto entropy = [](const auto& row) {
    double e = 0;
    for (Eigen::Index j = 0; j < row.size(); ++j)
      if (row(j) > 0) e -= row(j) * std::log(row(j));
    return e;
  };
  for (int trial = 0; trial < 50; ++trial) {
    // Rows (a, 1-a) and (1-a, a) give equal column sums.
    const double a = u(rng);
    MatD q(2, 2);
    q << a, 1 - a, 1 - a, a;
    const MatD p = target_distribution<double>(q);
    for (int i = 0; i < 2; ++i) {
      CHECK(entropy(p.row(i)) <= entropy(q.row(i)) + 1e-12);
      CHECK(p.row(i).sum() == Approx(1.0).margin(1e-12));
    }
  }
}

TEST_CASE("reconstruction and KL loss examples", "[cluster][dec]") {
  MatD x(1, 1), xr(1, 1);
  x << 0;
  xr << 2;
  CHECK(reconstruction_loss<double>(x, xr) == Approx(2.0));
  CHECK(reconstruction_loss<double>(x, x) == 0.0);
  MatD xr2(1, 1);
  xr2 << 4;
  CHECK(reconstruction_loss<double>(x, xr2) == Approx(4 * reconstruction_loss<double>(x, xr)));

  MatD p(1, 2), g(1, 2);
  p << 1, 0;
  g << 0.5, 0.5;
  CHECK(kl_divergence<double>(p, g) == Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(kl_divergence<double>(p, p) == 0.0);
  CHECK(kl_divergence<double>(g, p) != Approx(kl_divergence<double>(p, g)));
}

TEST_CASE("graph construction", "[cluster][graph]") {
  MatD same(50, 3);
  std::mt19937_64 rng(3);
  const MatD base = random_matrix(50, 1, rng);
  same << base, base, base;
  const MatD a = build_graph(same, {0, 50}, 0.6);
  CHECK(a == MatD::Ones(3, 3) - MatD::Identity(3, 3));

  const MatD noise = random_matrix(2000, 4, rng);
  CHECK(build_graph(noise, {0, 2000}, 0.6).isZero(0));

  data::SyntheticSpec spec;
  spec.noise_std = 0.1;
  spec.seed = 4;
  const auto [series, labels] = data::generate_synthetic(spec);
  CHECK(build_graph(series.values, {0, series.steps()}, 0.999).isZero(0));

  const MatD anti = (MatD(4, 2) << 1, -1, 2, -2, 3, -3, 5, -5).finished();
  CHECK(build_graph(anti, {0, 4}, 0.6)(0, 1) == 1.0);

  MatD with_const(10, 2);
  with_const.col(0) = random_matrix(10, 1, rng);
  with_const.col(1).setConstant(3.0);
  CHECK(build_graph(with_const, {0, 10}, 0.6).isZero(0));

  CHECK_THROWS_AS(build_graph(noise, {0, 2000}, 1.0), ConfigError);
}

TEST_CASE("propagation operator", "[cluster][graph]") {
  CHECK(propagation_operator(MatD::Zero(4, 4)) == MatD::Identity(4, 4));
  MatD a(3, 3);
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const MatD s = propagation_operator(a);
  const MatD at = a + MatD::Identity(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(s(i, j) == Approx(at(i, j) / std::sqrt(at.row(i).sum() * at.row(j).sum())).epsilon(1e-14));
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mask construction", "[cluster][mask]") {
  MaskMatrix expect(3, 3);
  expect << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK(build_mask({0, 0, 1}) == expect);
  CHECK(build_mask({2, 2, 2, 2}) == MaskMatrix::Ones(4, 4));
  CHECK(build_mask({0, 1, 2}) == identity_mask(3));

  CHECK(mask_vector(identity_mask(4)) == MaskVector{0, 0, 0, 0});
  CHECK(mask_vector(MaskMatrix::Ones(3, 3)) == MaskVector{1, 1, 1});
  CHECK(mask_vector(build_mask({0, 0, 1})) == MaskVector{1, 1, 0});

  const MatD bias = mask_bias<double>(expect);
  CHECK(bias(0, 1) == 0.0);
  CHECK(bias(0, 2) == -1e9);
}

TEST_CASE("mask is an equivalence relation", "[cluster][mask][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8), k = 1 + static_cast<int>(rng() % 4);
    Labels labels(n);
    for (auto& l : labels) l = static_cast<int>(rng() % k);
    const MaskMatrix m = build_mask(labels);
    const Eigen::MatrixXi mi = m.cast<int>();
    const Eigen::MatrixXi sq = mi * mi;
    for (int i = 0; i < n; ++i) {
      CHECK(m(i, i) == 1);
      for (int j = 0; j < n; ++j) {
        CHECK(m(i, j) == m(j, i));
        CHECK((sq(i, j) > 0) == (m(i, j) == 1));
      }
    }
  }
}

TEST_CASE("k-means examples", "[cluster][kmeans]") {
  std::mt19937_64 rng(6);
  const MatD pts = random_matrix(6, 2, rng);
  const auto all = kmeans(pts, 6, 1);
  CHECK(all.inertia == Approx(0.0).margin(1e-20));
  Labels sorted = all.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == Labels{0, 1, 2, 3, 4, 5});

  const auto one = kmeans(pts, 1, 1);
  CHECK((one.centers.row(0) - pts.colwise().mean()).norm() < 1e-12);

  MatD blobs(20, 2);
  Labels truth(20);
  for (int i = 0; i < 20; ++i) {
    truth[i] = i % 2;
    blobs.row(i) = random_matrix(1, 2, rng, 0.1);
    blobs(i, 0) += truth[i] * 50.0;
  }
  const auto km = kmeans(blobs, 2, 3);
  CHECK(adjusted_rand_index(km.labels, truth) == 1.0);
  CHECK(kmeans(blobs, 2, 3).labels == km.labels);

  CHECK_THROWS_AS(kmeans(pts, 7, 1), ShapeMismatch);
}

TEST_CASE("k-means re-seeds an emptied cluster", "[cluster][kmeans]") {
  // Duplicated points make k-means++ pick identical centres, one of which empties.
  MatD pts(5, 1);
  pts << 0, 0, 0, 0, 10;
  const auto km = kmeans(pts, 3, 2);
  std::set<int> used(km.labels.begin(), km.labels.end());
  CHECK(used.size() >= 2);
  CHECK(km.inertia == Approx(0.0).margin(1e-12));
}

TEST_CASE("silhouette and ARI against hand values", "[cluster][kmeans]") {
  MatD pts(4, 1);
  pts << 0, 1, 10, 11;
  // a = 1, b = 10 / 10.5 / ... evaluated directly.
  const double s0 = (10.5 - 1) / 10.5, s1 = (9.5 - 1) / 9.5;
  CHECK(silhouette_score(pts, {0, 0, 1, 1}) == Approx((s0 + s1 + s1 + s0) / 4).epsilon(1e-12));
  CHECK(silhouette_score(pts, {0, 0, 0, 0}) == -1.0);

  CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == Approx(1.0));
  CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}) == Approx(-0.5));
  // sklearn reference: adjusted_rand_score([0,0,0,1,1,1],[0,0,1,1,2,2]) = 0.24242424...
  CHECK(adjusted_rand_index({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}) == Approx(0.2424242424).epsilon(1e-9));
}

TEST_CASE("cluster count selection", "[cluster][kmeans]") {
  std::mt19937_64 rng(7);
  MatD blobs(12, 2);
  for (int i = 0; i < 12; ++i) {
    blobs.row(i) = random_matrix(1, 2, rng, 0.05);
    blobs(i, 1) += (i % 2) * 20.0;
  }
  CHECK(select_cluster_count(blobs, {2, 3, 4}, 1).n == 2);
  CHECK(select_cluster_count(blobs, {3}, 1).n == 3);
  CHECK(select_cluster_count(blobs, {1, 2}, 1).n == 2);
  CHECK(select_cluster_count(blobs, {1}, 1).n == 1);

  const MatD two = random_matrix(2, 3, rng);
  const auto c = select_cluster_count(two, {2}, 1);
  CHECK(c.n == 2);
  CHECK((build_mask(c.clustering.labels) == identity_mask(2)));

  MatD dup(4, 1);  // all tied: smaller count wins
  dup << 0, 0, 5, 5;
  CHECK(select_cluster_count(dup, {2, 3}, 1).n == 2);
  CHECK_THROWS_AS(select_cluster_count(blobs, {}, 1), ConfigError);
}

TEST_CASE("DTW distance", "[cluster][dtw]") {
  VecD x(200), y(200);
  for (int i = 0; i < 200; ++i) {
    x(i) = std::sin(0.1 * i);
    y(i) = std::sin(0.1 * (i - 10));
  }
  CHECK(dtw_distance(x, x, 50) == 0.0);
  CHECK(dtw_distance(x, y, 50) < (x - y).norm());
  CHECK(dtw_distance(x, y, 50) == Approx(dtw_distance(y, x, 50)).epsilon(1e-14));
  // Band 0 is lock-step: exactly Euclidean.
  CHECK(dtw_distance(x, y, 0) == Approx((x - y).norm()).epsilon(1e-14));

  VecD a(3), b(4);
  a << 0, 1, 2;
  b << 0, 1, 1, 2;
  CHECK(dtw_distance(a, b) == 0.0);
}

TEST_CASE("DTW clustering recovers planted groups", "[cluster][dtw]") {
  data::SyntheticSpec spec;
  spec.noise_std = 0.0;
  spec.seed = 11;
  const auto [series, truth] = data::generate_synthetic(spec);
  const auto labels = dtw_cluster(series.values, {0, 1400}, 2);
  CHECK(adjusted_rand_index(labels, truth) == 1.0);
  CHECK(dtw_cluster(series.values, {0, 1400}, 2) == labels);
}

TEST_CASE("average linkage on a hand distance matrix", "[cluster][dtw]") {
  MatD d(4, 4);
  d << 0, 1, 5, 6, 1, 0, 5, 6, 5, 5, 0, 2, 6, 6, 2, 0;
  CHECK(average_linkage(d, 2) == Labels{0, 0, 1, 1});
  CHECK(average_linkage(d, 4) == Labels{0, 1, 2, 3});
  CHECK(average_linkage(d, 1) == Labels{0, 0, 0, 0});
}

TEST_CASE("autoencoder shapes and zero behaviour", "[cluster][rfl]") {
  std::mt19937_64 rng(8);
  ad::ParameterSet<double> ps;
  Rfl<double> rfl(ps, {96, 32, 10}, rng);
  ad::Tape<double> t;
  auto x = t.constant(random_matrix(7, 96, rng));
  auto z = rfl.encode(t, x);
  CHECK(z.h1.rows() == 7);
  CHECK(z.h1.cols() == 32);
  CHECK(z.h2.rows() == 7);
  CHECK(z.h2.cols() == 10);
  auto xr = rfl.decode(t, z.h2);
  CHECK(xr.rows() == 7);
  CHECK(xr.cols() == 96);
  CHECK_THROWS_AS(rfl.encode(t, t.constant(MatD::Zero(7, 95))), ShapeMismatch);

  for (auto& p : ps)
    if (p.name.find(".b") != std::string::npos) p.value.setZero();
  ad::Tape<double> t2;
  auto z0 = rfl.encode(t2, t2.constant(MatD::Zero(3, 96)));
  CHECK(z0.h2.value().isZero(0));
  CHECK(rfl.decode(t2, t2.constant(MatD::Zero(3, 10))).value().isZero(0));
}

TEST_CASE("autoencoder is row-equivariant", "[cluster][rfl][property]") {
  std::mt19937_64 rng(9);
  ad::ParameterSet<double> ps;
  Rfl<double> rfl(ps, {24, 8, 4}, rng);
  const MatD x = random_matrix(5, 24, rng);
  const std::vector<int> perm{3, 0, 4, 1, 2};
  MatD xp(5, 24);
  for (int i = 0; i < 5; ++i) xp.row(i) = x.row(perm[i]);
  ad::Tape<double> t;
  const MatD h = rfl.encode(t, t.constant(x)).h2.value();
  const MatD hp = rfl.encode(t, t.constant(xp)).h2.value();
  for (int i = 0; i < 5; ++i) CHECK((hp.row(i) - h.row(perm[i])).norm() < 1e-12);
}

TEST_CASE("graph network forward", "[cluster][gcl]") {
  std::mt19937_64 rng(10);
  ad::ParameterSet<double> ps;
  const LatentDims dims{16, 6, 4};
  Gcl<double> gcl(ps, dims, 3, rng);
  ad::Tape<double> t;

  const MatD x = random_matrix(8, 16, rng);  // two windows of four channels
  Latents<double> z{t.constant(random_matrix(8, 6, rng)), t.constant(random_matrix(8, 4, rng))};
  MatD a = MatD::Zero(4, 4);
  a(0, 1) = a(1, 0) = 1;
  auto g = gcl.forward(t, t.constant(x), propagation_operator(a), z);
  CHECK(g.rows() == 8);
  CHECK(g.cols() == 3);
  for (Eigen::Index r = 0; r < 8; ++r) CHECK(g.value().row(r).sum() == Approx(1.0).margin(1e-12));

  // Isolated identical nodes with identical latents give identical rows.
  MatD xi = random_matrix(4, 16, rng);
  xi.row(3) = xi.row(2);
  MatD h1 = random_matrix(4, 6, rng), h2 = random_matrix(4, 4, rng);
  h1.row(3) = h1.row(2);
  h2.row(3) = h2.row(2);
  auto gi = gcl.forward(t, t.constant(xi), propagation_operator(a), {t.constant(h1), t.constant(h2)});
  CHECK(gi.value().row(2) == gi.value().row(3));

  // With no edges and zero fusion, layer one is a per-node map.
  Gcl<double> plain(ps, dims, 3, rng, 0.0);
  ad::ParameterSet<double> tmp;
  auto g0 = plain.forward(t, t.constant(xi.topRows(1)), MatD::Identity(1, 1),
                          {t.constant(h1.topRows(1)), t.constant(h2.topRows(1))});
  auto g0b = plain.forward(t, t.constant(xi), MatD::Identity(4, 4), {t.constant(h1), t.constant(h2)});
  CHECK((g0.value().row(0) - g0b.value().row(0)).norm() < 1e-14);
}

TEST_CASE("clustering objective gradient matches finite differences", "[cluster][gradient]") {
  // N=3, L=8, l1=4, l2=3, n=2; two windows per batch.
  std::mt19937_64 rng(12);
  ad::ParameterSet<double> ps;
  const LatentDims dims{8, 4, 3};
  Rfl<double> rfl(ps, dims, rng);
  Gcl<double> gcl(ps, dims, 2, rng);
  auto& mu = ps.add("mu", random_matrix(2, 3, rng, 0.5));
  MatD a = MatD::Zero(3, 3);
  a(0, 1) = a(1, 0) = 1;
  train::ClusterNet<double> net;
  net.rfl = &rfl;
  net.gcl = &gcl;
  net.centers = &mu;
  net.propagation = propagation_operator(a);
  net.channels = 3;
  const MatD x = random_matrix(6, 8, rng);
  auto r = dgc::testing::check_gradients(ps, [&](ad::Tape<double>& t) {
    auto c = train::cluster_terms(t, t.constant(x), net);
    return ad::add(c.rec, c.ds);
  });
  INFO("relative error " << r.relative_error);
  CHECK(r.relative_error < 1e-3);
  CHECK(r.analytic_norm > 0);
}
