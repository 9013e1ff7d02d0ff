#include "dgc/io/report.hpp"

#include "dgc/cluster/graph.hpp"
#include "dgc/io/files.hpp"

#include <charconv>
#include <fstream>
#include <set>

namespace dgc::io {

namespace {

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json matrix_json(const MatD& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json mask_json(const MaskMatrix& m) { return matrix_json(m.cast<double>()).get<std::vector<std::vector<int>>>(); }

}  // namespace

nlohmann::json to_json(const train::RunReport& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["lookback"] = r.lookback;
  j["horizon"] = r.horizon;
  j["ablation"] = train::to_string(r.ablation);
  j["seed"] = r.seed;
  j["config_hash"] = r.config_hash;
  j["lambda1"] = r.weights.lambda1;
  j["lambda2"] = r.weights.lambda2;

  j["pretrain"] = nlohmann::json::array();
  for (const auto& p : r.pretrain) j["pretrain"].push_back({{"epoch", p.epoch}, {"train_rec", p.train_rec}, {"val_rec", p.val_rec}});
  j["gcl_clusters"] = r.gcl_clusters;
  j["initial_scores"] = nlohmann::json::array();
  for (const auto& [n, s] : r.initial_scores) j["initial_scores"].push_back({{"n", n}, {"silhouette", s}});

  j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs)
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_rec", e.train_rec},
                           {"train_ds", e.train_ds},
                           {"train_pred", e.train_pred},
                           {"train_total", e.train_total},
                           {"val_pred", e.val_pred},
                           {"mask_clusters", e.mask_clusters},
                           {"mask_identity", e.mask_identity},
                           {"labels", e.labels},
                           {"seconds", e.seconds}});
  if (!r.steps.empty()) {
    j["steps"] = nlohmann::json::array();
    for (const auto& s : r.steps)
      j["steps"].push_back({{"rec", s.rec}, {"ds", s.ds}, {"pred", s.pred}, {"total", s.total}});
  }
  j["best_epoch"] = r.best_epoch;
  j["best_val_pred"] = r.best_val_pred;
  j["stopped_early"] = r.stopped_early;
  j["labels"] = r.labels;
  j["mask"] = mask_json(r.mask);
  j["test"] = {{"mse", r.test.mse}, {"mae", r.test.mae}};
  j["wall_clock_s"] = r.wall_clock_s;
  return j;
}

std::string metrics_csv_header() { return "dataset,horizon,ablation,seed,mse,mae,epochs,wall_clock_s"; }

std::string metrics_csv_row(const train::RunReport& r) {
  return r.dataset + "," + std::to_string(r.horizon) + "," + train::to_string(r.ablation) + "," +
         std::to_string(r.seed) + "," + number(r.test.mse) + "," + number(r.test.mae) + "," +
         std::to_string(r.epochs.size()) + "," + number(r.wall_clock_s);
}

void append_metrics_csv(const std::filesystem::path& path, const train::RunReport& report) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to " + path.string());
  if (fresh) out << metrics_csv_header() << "\n";
  out << metrics_csv_row(report) << "\n";
  if (!out) throw IoError("write failed for " + path.string());
}

std::string reproducible_fields(const std::string& row) {
  const auto cut = row.rfind(',');
  return cut == std::string::npos ? row : row.substr(0, cut);
}

nlohmann::json to_json(const ClusterSummary& s) {
  nlohmann::json j;
  j["channels"] = s.channel_names;
  j["labels"] = s.labels;
  j["n"] = std::set<int>(s.labels.begin(), s.labels.end()).size();
  j["mask"] = mask_json(s.mask);
  j["threshold"] = s.threshold;
  j["correlation"] = matrix_json(s.correlation);
  if (s.ari) j["ari"] = *s.ari;
  return j;
}

void validate_cluster_json(const nlohmann::json& j) {
  const auto fail = [](const std::string& what) { throw ConfigError("cluster JSON: " + what); };
  for (const char* key : {"channels", "labels", "n", "mask", "threshold"})
    if (!j.contains(key)) fail(std::string("missing '") + key + "'");
  if (!j["labels"].is_array() || !j["mask"].is_array() || !j["channels"].is_array()) fail("wrong field types");
  const std::size_t n = j["labels"].size();
  if (j["channels"].size() != n) fail("channels and labels differ in length");
  if (j["mask"].size() != n) fail("mask must be N x N");
  std::set<int> distinct;
  for (const auto& l : j["labels"]) {
    if (!l.is_number_integer() || l.get<int>() < 0) fail("labels must be non-negative integers");
    distinct.insert(l.get<int>());
  }
  if (j["n"].get<std::size_t>() != distinct.size()) fail("n does not match the labels");
  for (std::size_t a = 0; a < n; ++a) {
    if (!j["mask"][a].is_array() || j["mask"][a].size() != n) fail("mask must be N x N");
    for (std::size_t b = 0; b < n; ++b) {
      const auto& v = j["mask"][a][b];
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) fail("mask entries must be 0 or 1");
      if (v != j["mask"][b][a]) fail("mask must be symmetric");
      if ((v.get<int>() == 1) != (j["labels"][a] == j["labels"][b])) fail("mask disagrees with labels");
    }
  }
  if (j.contains("correlation") && j["correlation"].size() != n) fail("correlation must be N x N");
}

void write_forecast_csv(const std::filesystem::path& path, const MatD& forecast,
                        const std::vector<std::string>& channel_names) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  data::write_csv(path, forecast, channel_names);
}

}  // namespace dgc::io
