#pragma once

// Run and sweep orchestration shared by the CLI and the acceptance suite.

#include "dgc/io/config.hpp"
#include "dgc/io/datasets.hpp"
#include "dgc/train/trainer.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace dgc::app {

struct RunOptions {
  bool write_outputs = true;  // report.json, model.ckpt, config.toml, metrics.csv
  std::ostream* log = nullptr;
};

struct RunOutput {
  train::RunReport report;
  std::filesystem::path dir;  // empty when nothing was written
  std::string csv_row;
};

/// <dataset>_S<horizon>_<ablation>_seed<seed>
std::string run_name(const train::RunReport& report);

/// Trains one configuration on an already loaded dataset.
RunOutput run_experiment(const io::ExperimentConfig& config, const io::LoadedDataset& dataset,
                         const RunOptions& options = {});

/// `config` with one sweep cell applied.
io::ExperimentConfig cell_config(const io::ExperimentConfig& config, Eigen::Index horizon, train::Ablation ablation,
                                 std::uint64_t seed);

struct SweepCell {
  Eigen::Index horizon = 0;
  train::Ablation ablation = train::Ablation::Full;
  double mse = 0, mae = 0;  // mean over seeds
  int runs = 0;
};

struct SweepResult {
  std::vector<RunOutput> runs;
  std::vector<SweepCell> cells;  // horizon-major, ablations in config order
};

/// Every (horizon, ablation, seed) of config.sweep, sequentially.
SweepResult run_sweep(const io::ExperimentConfig& config, const io::LoadedDataset& dataset,
                      const RunOptions& options = {});

/// Rows are horizons, columns <ablation>_mse / <ablation>_mae.
std::string sweep_csv(const std::vector<SweepCell>& cells);
std::string sweep_table(const std::vector<SweepCell>& cells);

}  // namespace dgc::app
