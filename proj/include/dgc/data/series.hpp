#pragma once

#include "dgc/core/errors.hpp"
#include "dgc/core/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dgc::data {

enum class Frequency { TenMinutes, FifteenMinutes, Hourly, Daily, Weekly, Unknown };

std::string to_string(Frequency f);
Frequency frequency_from_string(const std::string& s);

/// Step counts of the contiguous train / validation / test segments.
struct SplitSizes {
  Eigen::Index train = 0;
  Eigen::Index val = 0;
  Eigen::Index test = 0;

  Eigen::Index total() const { return train + val + test; }
  bool empty() const { return total() == 0; }
  bool operator==(const SplitSizes&) const = default;
};

/// T time steps x N channels.
struct MultivariateSeries {
  MatD values;
  std::vector<std::string> channel_names;
  std::vector<std::string> timestamps;  // parsed, never fed to the model
  Frequency frequency = Frequency::Unknown;
  SplitSizes split;

  Eigen::Index steps() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }
};

enum class MissingPolicy { Reject, ForwardFill };

struct CsvOptions {
  MissingPolicy missing = MissingPolicy::Reject;
};

/// Header row, first column timestamp, remaining columns numeric channels.
/// Throws MalformedCsv (also for missing cells under Reject), EmptySeries, IoError.
MultivariateSeries load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Writes `values` (rows = steps) with a header and an integer step column.
void write_csv(const std::filesystem::path& path, const MatD& values, const std::vector<std::string>& channel_names,
               const std::vector<std::string>& timestamps = {});

/// Half-open step range [begin, end) within a series.
struct SplitView {
  Eigen::Index begin = 0;
  Eigen::Index end = 0;
  Eigen::Index size() const { return end - begin; }
};

struct Splits {
  SplitView train, val, test;
};

/// Contiguous train -> val -> test segments from the start of the series.
/// Throws SplitTooLarge when the counts exceed the series length.
Splits split(const MultivariateSeries& series, const SplitSizes& counts);
Splits split(Eigen::Index steps, const SplitSizes& counts);

/// floor-based 0.7 / 0.1 / 0.2 style split; test takes the remainder.
SplitSizes ratio_split(Eigen::Index steps, double train = 0.7, double val = 0.1);

struct NormalizationStats {
  static constexpr double kStdFloor = 1e-8;

  VecD mean;
  VecD std;

  /// Channel-wise mean and (population) std of the given rows.
  static NormalizationStats fit(const MatD& values, const SplitView& rows);

  MatD apply(const MatD& values) const;
  MatD invert(const MatD& normalized) const;
};

/// Standardise every split with statistics fitted on the train split only.
MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationStats& stats);

/// Look-back / horizon pairs with rows ordered [window][channel]:
/// inputs (B*N x L), targets (B*N x S).
struct WindowBatch {
  MatD inputs;
  MatD targets;
  Eigen::Index batch = 0;
  Eigen::Index channels = 0;
  Eigen::Index lookback = 0;
  Eigen::Index horizon = 0;
};

/// All windows of one split. Windows never leave the split.
class WindowSet {
 public:
  WindowSet(const MatD& values, SplitView view, Eigen::Index lookback, Eigen::Index horizon, Eigen::Index stride = 1);

  Eigen::Index size() const { return count_; }
  Eigen::Index lookback() const { return lookback_; }
  Eigen::Index horizon() const { return horizon_; }
  Eigen::Index channels() const { return values_->cols(); }

  /// Absolute step index of the first input step of window k.
  Eigen::Index start(Eigen::Index k) const { return view_.begin + k * stride_; }

  WindowBatch gather(const std::vector<Eigen::Index>& indices) const;
  WindowBatch gather_range(Eigen::Index first, Eigen::Index count) const;

 private:
  const MatD* values_;
  SplitView view_;
  Eigen::Index lookback_;
  Eigen::Index horizon_;
  Eigen::Index stride_;
  Eigen::Index count_;
};

/// Throws SplitTooShort when the split cannot hold a single window.
WindowSet make_windows(const MatD& values, SplitView view, Eigen::Index lookback, Eigen::Index horizon,
                       Eigen::Index stride = 1);

struct GroupSignal {
  double cycles_per_step = 0.02;
  double phase = 0.0;
  double slope = 0.0;  // trend change over the whole series
  double amplitude = 1.0;
};

struct SyntheticSpec {
  Eigen::Index n_channels = 8;
  Eigen::Index n_groups = 2;
  Eigen::Index steps = 2000;
  std::uint64_t seed = 0;
  double noise_std = 0.1;
  /// One entry per group; drawn from `seed` when empty.
  std::vector<GroupSignal> groups;
};

/// Channel c belongs to group c % n_groups and equals its group's base
/// signal plus i.i.d. Gaussian noise. Deterministic under the seed.
std::pair<MultivariateSeries, Labels> generate_synthetic(const SyntheticSpec& spec);

/// Pearson correlation between columns of `values` over `rows`.
/// A constant column correlates 0 with everything (1 with itself).
MatD channel_correlation(const MatD& values, SplitView rows);

}  // namespace dgc::data
