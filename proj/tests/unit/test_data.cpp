#include "dgc/data/series.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace dgc;
using namespace dgc::data;
using Catch::Approx;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("dgc_test_" + name);
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("csv loading", "[data][csv]") {
  const auto minimal = load_csv(write_temp("min.csv", "date,a\n2020-01-01,1\n2020-01-02,2.5\n2020-01-03,-3e-1\n"));
  CHECK(minimal.channels() == 1);
  CHECK(minimal.steps() == 3);
  CHECK(minimal.values(2, 0) == Approx(-0.3));
  CHECK(minimal.channel_names == std::vector<std::string>{"a"});
  CHECK(minimal.timestamps[1] == "2020-01-02");

  const auto crlf = load_csv(write_temp("crlf.csv", "\xEF\xBB\xBF" "date,\"x\",y\r\nt0,1,2\r\nt1,3,4\r\n"));
  CHECK(crlf.channel_names == std::vector<std::string>{"x", "y"});
  CHECK(crlf.values(1, 1) == 4.0);

  CHECK_THROWS_AS(load_csv(write_temp("bad.csv", "d,a\n0,1\n1,2\n2,3\n3,4\n4,oops\n")), MalformedCsv);
  CHECK_THROWS_AS(load_csv(write_temp("ragged.csv", "d,a,b\n0,1,2\n1,2\n")), MalformedCsv);
  CHECK_THROWS_AS(load_csv(write_temp("empty.csv", "d,a\n")), EmptySeries);
  CHECK_THROWS_AS(load_csv(write_temp("onecol.csv", "d\n0\n")), MalformedCsv);
  CHECK_THROWS_AS(load_csv("/nonexistent/dgc.csv"), IoError);
}

TEST_CASE("missing values: reject by default, forward-fill on request", "[data][csv]") {
  const auto path = write_temp("gap.csv", "d,a,b\n0,1,2\n1,,5\n2,3,\n");
  CHECK_THROWS_AS(load_csv(path), MalformedCsv);
  const auto filled = load_csv(path, {MissingPolicy::ForwardFill});
  CHECK(filled.values(1, 0) == 1.0);
  CHECK(filled.values(2, 1) == 5.0);
  CHECK_THROWS_AS(load_csv(write_temp("gap0.csv", "d,a\n0,\n1,2\n"), {MissingPolicy::ForwardFill}), MalformedCsv);
}

TEST_CASE("csv round trip", "[data][csv]") {
  MatD v(3, 2);
  v << 1.5, -2, 0.1, 1e-9, 7, 8;
  const auto path = std::filesystem::temp_directory_path() / "dgc_test_rt.csv";
  write_csv(path, v, {"p", "q"});
  const auto back = load_csv(path);
  CHECK(back.values == v);
  CHECK(back.channel_names == std::vector<std::string>{"p", "q"});
}

TEST_CASE("splits", "[data][split]") {
  const auto s = split(17420, {8545, 2881, 2881});
  CHECK(s.train.begin == 0);
  CHECK(s.train.end == 8545);
  CHECK(s.val.end == 8545 + 2881);
  CHECK(s.test.size() == 2881);

  const auto t = split(10, {6, 2, 2});
  CHECK(t.train.end == 6);
  CHECK(t.val.end == 8);
  CHECK(t.test.end == 10);
  CHECK_THROWS_AS(split(10, {8, 2, 2}), SplitTooLarge);

  const auto r = ratio_split(1000);
  CHECK(r.train == 700);
  CHECK(r.val == 100);
  CHECK(r.test == 200);
}

TEST_CASE("normalisation", "[data][normalize]") {
  MatD v(6, 2);
  v << 5, 1, 5, 2, 5, 3, 5, 4, 5, 100, 5, -100;
  const auto stats = NormalizationStats::fit(v, {0, 4});
  CHECK(stats.std(0) == NormalizationStats::kStdFloor);
  const MatD n = stats.apply(v);
  CHECK(n.col(0).isZero(0));
  CHECK((stats.invert(n) - v).cwiseAbs().maxCoeff() <= 1e-10 * v.cwiseAbs().maxCoeff());

  // Stats ignore rows outside the train split.
  MatD w = v;
  w(5, 1) = 1e6;
  const auto stats2 = NormalizationStats::fit(w, {0, 4});
  CHECK(stats2.mean == stats.mean);
  CHECK(stats2.std == stats.std);

  MatD z(4, 1);
  z << -1, 1, -1, 1;  // mean 0, population std 1
  const auto sz = NormalizationStats::fit(z, {0, 4});
  CHECK((sz.apply(z) - z).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("windowing", "[data][windows]") {
  MatD v(400, 2);
  for (int r = 0; r < 400; ++r) v.row(r) << r, -r;
  CHECK(make_windows(v, {0, 200}, 96, 96).size() == 9);
  CHECK(make_windows(v, {100, 292}, 96, 96).size() == 1);
  CHECK_THROWS_AS(make_windows(v, {0, 191}, 96, 96), SplitTooShort);

  const auto ws = make_windows(v, {50, 250}, 10, 5);
  const auto b = ws.gather({0, ws.size() - 1});
  CHECK(b.batch == 2);
  CHECK(b.inputs.rows() == 4);
  // Row layout [window][channel]; targets follow inputs immediately.
  for (Eigen::Index w = 0; w < 2; ++w) {
    for (Eigen::Index c = 0; c < 2; ++c) {
      const Eigen::Index row = w * 2 + c;
      const double step = c == 0 ? 1 : -1;
      CHECK(b.targets(row, 0) - b.inputs(row, 9) == step);
    }
  }
  CHECK(b.inputs(0, 0) == 50);
  CHECK(b.targets(2, 4) == 249);  // last window ends at the split boundary
  const auto strided = make_windows(v, {0, 200}, 96, 96, 4);
  CHECK(strided.size() == 3);
}

TEST_CASE("synthetic generator", "[data][synthetic]") {
  SyntheticSpec spec;
  spec.noise_std = 0.0;
  spec.seed = 3;
  const auto [clean, labels] = generate_synthetic(spec);
  CHECK(clean.values.rows() == 2000);
  CHECK(clean.values.cols() == 8);
  CHECK(labels == Labels{0, 1, 0, 1, 0, 1, 0, 1});
  for (int c = 2; c < 8; ++c) CHECK(clean.values.col(c) == clean.values.col(c % 2));
  const MatD corr = channel_correlation(clean.values, {0, 2000});
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      if (labels[i] == labels[j]) CHECK(corr(i, j) == Approx(1.0).epsilon(1e-12));

  const auto again = generate_synthetic(spec);
  CHECK(again.first.values == clean.values);

  spec.noise_std = 0.1;
  const auto [noisy, nl] = generate_synthetic(spec);
  const MatD c = channel_correlation(noisy.values, {0, 2000});
  double within = 1, across = -1;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      if (i == j) continue;
      if (nl[i] == nl[j]) within = std::min(within, c(i, j));
      else across = std::max(across, std::abs(c(i, j)));
    }
  CHECK(within > across);

  spec.n_groups = 9;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
