#pragma once

#include "dgc/train/trainer.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dgc::io {

nlohmann::json to_json(const train::RunReport& report);

/// dataset,horizon,ablation,seed,mse,mae,epochs,wall_clock_s
std::string metrics_csv_header();
std::string metrics_csv_row(const train::RunReport& report);

/// Appends one row, writing the header first when the file is new or empty.
void append_metrics_csv(const std::filesystem::path& path, const train::RunReport& report);

/// The fields that must agree between two runs of the same config
/// (everything except the wall clock).
std::string reproducible_fields(const std::string& csv_row);

struct ClusterSummary {
  std::vector<std::string> channel_names;
  Labels labels;
  MaskMatrix mask;
  double threshold = 0;
  MatD correlation;
  std::optional<double> ari;  // against planted groups, when known
};

/// {channels, labels, n, mask, threshold, correlation[, ari]}
nlohmann::json to_json(const ClusterSummary& summary);

/// Throws ConfigError when `j` does not have the shape to_json produces:
/// square 0/1 symmetric mask with unit diagonal that agrees with the labels.
void validate_cluster_json(const nlohmann::json& j);

/// Rows are forecast steps, columns are channels.
void write_forecast_csv(const std::filesystem::path& path, const MatD& forecast,
                        const std::vector<std::string>& channel_names);

}  // namespace dgc::io
