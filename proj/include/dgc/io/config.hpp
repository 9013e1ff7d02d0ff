#pragma once

#include "dgc/data/series.hpp"
#include "dgc/train/config.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace dgc::io {

/// Grid run by `dgc sweep`.
struct SweepConfig {
  std::vector<Eigen::Index> horizons{96};
  std::vector<train::Ablation> ablations{train::Ablation::Full};
  std::vector<std::uint64_t> seeds{2024};
};

/// Everything one run (or sweep) needs. Every field has a default, so an
/// empty file is a valid config.
struct ExperimentConfig {
  /// Registry name (ETTh1, ETTm2, weather, ...), a CSV path, or "synthetic".
  std::string dataset = "ETTh1";
  /// Root for registry names; empty means $DGC_DATA_DIR, then ./data.
  std::string data_dir;
  std::string output_dir = "runs";
  bool forward_fill = false;

  data::SyntheticSpec synthetic;
  train::ModelConfig model;
  train::TrainConfig train;
  SweepConfig sweep;

  void validate() const;
};

/// Throws ConfigError on syntax errors, wrong types and unknown keys.
ExperimentConfig parse_config(std::string_view toml_text, std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical TOML listing every field; parse_config(to_toml(c)) == c.
std::string to_toml(const ExperimentConfig& config);

/// 64-bit FNV-1a of the canonical TOML, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace dgc::io
