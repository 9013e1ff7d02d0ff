#pragma once

#include "dgc/io/config.hpp"
#include "dgc/train/trainer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgc::io {

struct DatasetInfo {
  std::string name;
  std::string file;
  data::SplitSizes split;  // empty: 0.7 / 0.1 / 0.2 by ratio
  data::Frequency frequency = data::Frequency::Unknown;
  Eigen::Index channels = 0;
  Eigen::Index lookback = 96;
  Eigen::Index patch_len = 16;
  Eigen::Index stride = 8;
  std::vector<Eigen::Index> horizons;
};

const std::vector<DatasetInfo>& dataset_registry();

/// Case-insensitive lookup; nullptr if unknown.
const DatasetInfo* find_dataset(const std::string& name);

/// `data_dir` if set, else $DGC_DATA_DIR, else ./data.
std::filesystem::path data_root(const std::string& data_dir);

/// Registry names resolve under data_root; anything else is a path.
/// Throws IoError naming every location tried.
std::filesystem::path resolve_dataset(const std::string& dataset, const std::string& data_dir);

struct LoadedDataset {
  train::PreparedData data;
  std::optional<Labels> truth;  // planted groups of synthetic data
};

/// Loads, splits and standardises the configured dataset. Registry datasets
/// get their published split sizes.
LoadedDataset load_dataset(const ExperimentConfig& config);

}  // namespace dgc::io
