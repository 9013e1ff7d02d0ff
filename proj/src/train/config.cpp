#include "dgc/train/config.hpp"

#include <array>
#include <utility>

namespace dgc::train {

namespace {
constexpr std::array<std::pair<Ablation, const char*>, 5> kAblations{{{Ablation::Full, "full"},
                                                                       {Ablation::NoGcl, "no_gcl"},
                                                                       {Ablation::NoRfl, "no_rfl"},
                                                                       {Ablation::DtwCluster, "dtw_cluster"},
                                                                       {Ablation::CiOnly, "ci_only"}}};
}

std::string to_string(Ablation a) {
  for (const auto& [v, s] : kAblations)
    if (v == a) return s;
  return "unknown";
}

Ablation ablation_from_string(const std::string& s) {
  for (const auto& [v, name] : kAblations)
    if (s == name) return v;
  throw ConfigError("unknown ablation '" + s + "' (expected full, no_gcl, no_rfl, dtw_cluster or ci_only)");
}

std::string to_string(ClusterRefresh r) { return r == ClusterRefresh::Epoch ? "epoch" : "batch"; }

ClusterRefresh cluster_refresh_from_string(const std::string& s) {
  if (s == "epoch") return ClusterRefresh::Epoch;
  if (s == "batch") return ClusterRefresh::Batch;
  throw ConfigError("unknown cluster_refresh '" + s + "' (expected epoch or batch)");
}

}  // namespace dgc::train
