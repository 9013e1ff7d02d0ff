#include "dgc/io/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

namespace dgc::io {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

const std::vector<DatasetInfo>& dataset_registry() {
  using data::Frequency;
  const std::vector<Eigen::Index> long_h{96, 192, 336, 720};
  static const std::vector<DatasetInfo> registry{
      {"ETTh1", "ETTh1.csv", {8545, 2881, 2881}, Frequency::Hourly, 7, 96, 16, 8, long_h},
      {"ETTh2", "ETTh2.csv", {8545, 2881, 2881}, Frequency::Hourly, 7, 96, 16, 8, long_h},
      {"ETTm1", "ETTm1.csv", {34465, 11521, 11521}, Frequency::FifteenMinutes, 7, 96, 16, 8, long_h},
      {"ETTm2", "ETTm2.csv", {34465, 11521, 11521}, Frequency::FifteenMinutes, 7, 96, 16, 8, long_h},
      {"exchange", "exchange_rate.csv", {5120, 665, 1422}, Frequency::Daily, 8, 96, 16, 8, long_h},
      {"weather", "weather.csv", {36972, 5271, 10540}, Frequency::TenMinutes, 21, 96, 16, 8, long_h},
      {"ili", "national_illness.csv", {617, 74, 170}, Frequency::Weekly, 7, 104, 24, 2, {24, 36, 48, 60}},
      {"electricity", "electricity.csv", {18317, 2633, 5261}, Frequency::Hourly, 321, 96, 16, 8, long_h},
      {"traffic", "traffic.csv", {}, Frequency::Hourly, 862, 96, 16, 8, long_h},
  };
  return registry;
}

const DatasetInfo* find_dataset(const std::string& name) {
  const std::string key = lower(name);
  for (const auto& d : dataset_registry())
    if (lower(d.name) == key) return &d;
  return nullptr;
}

std::filesystem::path data_root(const std::string& data_dir) {
  if (!data_dir.empty()) return data_dir;
  if (const char* env = std::getenv("DGC_DATA_DIR"); env && *env) return env;
  return "data";
}

std::filesystem::path resolve_dataset(const std::string& dataset, const std::string& data_dir) {
  namespace fs = std::filesystem;
  std::vector<fs::path> tried;
  if (const auto* info = find_dataset(dataset)) {
    const fs::path root = data_root(data_dir);
    for (const fs::path& p : {root / info->file, root / info->name / info->file}) {
      if (fs::is_regular_file(p)) return p;
      tried.push_back(p);
    }
  } else {
    const fs::path p(dataset);
    if (fs::is_regular_file(p)) return p;
    tried.push_back(p);
    if (p.is_relative() && !data_dir.empty()) {
      const fs::path q = fs::path(data_dir) / p;
      if (fs::is_regular_file(q)) return q;
      tried.push_back(q);
    }
  }
  std::string msg = "dataset '" + dataset + "' not found; tried";
  for (std::size_t i = 0; i < tried.size(); ++i) msg += (i ? ", " : " ") + tried[i].string();
  throw IoError(msg);
}

LoadedDataset load_dataset(const ExperimentConfig& config) {
  LoadedDataset out;
  if (lower(config.dataset) == "synthetic") {
    auto [series, labels] = data::generate_synthetic(config.synthetic);
    out.data = train::prepare(series, "synthetic");
    out.truth = std::move(labels);
    return out;
  }
  const auto path = resolve_dataset(config.dataset, config.data_dir);
  data::CsvOptions opts;
  if (config.forward_fill) opts.missing = data::MissingPolicy::ForwardFill;
  auto series = data::load_csv(path, opts);
  std::string name = path.stem().string();
  if (const auto* info = find_dataset(config.dataset)) {
    name = info->name;
    series.frequency = info->frequency;
    if (!info->split.empty()) series.split = info->split;
  }
  out.data = train::prepare(series, name);
  return out;
}

}  // namespace dgc::io
