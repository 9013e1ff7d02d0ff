#pragma once

// Checkpoint file layout:
//   line 1   "DGCCKPT"
//   line 2   byte length of the JSON header
//   header   JSON; "tensors" lists {name, rows, cols} in storage order
//   payload  row-major little-endian float32 values of each tensor

#include "dgc/io/config.hpp"
#include "dgc/train/model.hpp"
#include "dgc/train/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace dgc::io {

inline constexpr int kCheckpointSchema = 1;

struct Checkpoint {
  nlohmann::json header;
  std::vector<std::pair<std::string, MatF>> tensors;

  const MatF* find(const std::string& name) const;
};

/// Atomic. `header` gains "schema_version" and "tensors".
void write_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                      const std::vector<std::pair<std::string, const MatF*>>& tensors);

/// Throws CheckpointError on a bad magic, header or truncated payload.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Parameters, graph, mask and the effective config of a finished run.
void save_model(const std::filesystem::path& path, const train::Model<float>& model, const train::RunReport& report,
                const ExperimentConfig& config);

struct LoadedModel {
  ExperimentConfig config;
  std::unique_ptr<train::Model<float>> model;
  Labels labels;
  MaskMatrix mask;
  nlohmann::json header;
};

LoadedModel load_model(const std::filesystem::path& path);

}  // namespace dgc::io
