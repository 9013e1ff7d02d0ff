#pragma once

#include "dgc/core/types.hpp"

#include <string>
#include <vector>

namespace dgc::io {

/// Square-cell heatmap on a blue-white-red scale over [lo, hi].
std::string heatmap_svg(const MatD& values, const std::vector<std::string>& labels, const std::string& title,
                        double lo = -1.0, double hi = 1.0);

struct ForecastPanel {
  std::string name;
  std::vector<double> history;   // look-back window
  std::vector<double> truth;     // horizon ground truth
  std::vector<double> forecast;  // horizon prediction
};

/// One stacked panel per channel: history and truth in grey/black, forecast in red.
std::string forecast_svg(const std::vector<ForecastPanel>& panels, const std::string& title);

}  // namespace dgc::io
