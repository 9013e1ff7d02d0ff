#include "dgc/data/series.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace dgc::data {

std::string to_string(Frequency f) {
  switch (f) {
    case Frequency::TenMinutes: return "10min";
    case Frequency::FifteenMinutes: return "15min";
    case Frequency::Hourly: return "hourly";
    case Frequency::Daily: return "daily";
    case Frequency::Weekly: return "weekly";
    case Frequency::Unknown: break;
  }
  return "unknown";
}

Frequency frequency_from_string(const std::string& s) {
  if (s == "10min") return Frequency::TenMinutes;
  if (s == "15min") return Frequency::FifteenMinutes;
  if (s == "hourly") return Frequency::Hourly;
  if (s == "daily") return Frequency::Daily;
  if (s == "weekly") return Frequency::Weekly;
  return Frequency::Unknown;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "null";
}

}  // namespace

MultivariateSeries load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw EmptySeries("no header row in " + path.string());
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  const auto header = split_fields(line);
  if (header.size() < 2) throw MalformedCsv(path.string() + ": need a timestamp column and at least one channel");

  MultivariateSeries series;
  const std::size_t n = header.size() - 1;
  for (std::size_t c = 1; c < header.size(); ++c) series.channel_names.emplace_back(header[c]);

  std::vector<double> flat;
  std::vector<bool> missing;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw MalformedCsv(path.string() + ":" + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    series.timestamps.emplace_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto cell = fields[c];
      if (is_missing(cell)) {
        if (options.missing == MissingPolicy::Reject)
          throw MalformedCsv(path.string() + ":" + std::to_string(line_no) + ": missing value in column '" +
                             series.channel_names[c - 1] + "'");
        flat.push_back(std::numeric_limits<double>::quiet_NaN());
        missing.push_back(true);
        continue;
      }
      double v = 0;
      const auto* first = cell.data();
      const auto* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      const auto res = std::from_chars(first, last, v);
      if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v))
        throw MalformedCsv(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + std::string(cell) +
                           "' in column '" + series.channel_names[c - 1] + "'");
      flat.push_back(v);
      missing.push_back(false);
    }
    ++row;
  }
  if (row == 0) throw EmptySeries(path.string() + " has a header but no data rows");

  series.values = Eigen::Map<const MatD>(flat.data(), static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(n));
  if (options.missing == MissingPolicy::ForwardFill) {
    for (Eigen::Index c = 0; c < series.channels(); ++c) {
      for (Eigen::Index t = 0; t < series.steps(); ++t) {
        if (!std::isnan(series.values(t, c))) continue;
        if (t == 0) throw MalformedCsv(path.string() + ": cannot forward-fill a missing first value in column '" +
                                       series.channel_names[c] + "'");
        series.values(t, c) = series.values(t - 1, c);
      }
    }
  }
  return series;
}

void write_csv(const std::filesystem::path& path, const MatD& values, const std::vector<std::string>& channel_names,
               const std::vector<std::string>& timestamps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "date";
  for (const auto& name : channel_names) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    if (static_cast<std::size_t>(t) < timestamps.size()) out << timestamps[t];
    else out << t;
    for (Eigen::Index c = 0; c < values.cols(); ++c) out << ',' << values(t, c);
    out << '\n';
  }
}

Splits split(Eigen::Index steps, const SplitSizes& counts) {
  if (counts.train < 0 || counts.val < 0 || counts.test < 0 || counts.total() > steps)
    throw SplitTooLarge("split counts " + std::to_string(counts.train) + "/" + std::to_string(counts.val) + "/" +
                        std::to_string(counts.test) + " exceed series length " + std::to_string(steps));
  Splits s;
  s.train = {0, counts.train};
  s.val = {counts.train, counts.train + counts.val};
  s.test = {counts.train + counts.val, counts.total()};
  return s;
}

Splits split(const MultivariateSeries& series, const SplitSizes& counts) { return split(series.steps(), counts); }

SplitSizes ratio_split(Eigen::Index steps, double train, double val) {
  SplitSizes s;
  s.train = static_cast<Eigen::Index>(std::floor(train * static_cast<double>(steps)));
  s.val = static_cast<Eigen::Index>(std::floor(val * static_cast<double>(steps)));
  s.test = steps - s.train - s.val;
  return s;
}

NormalizationStats NormalizationStats::fit(const MatD& values, const SplitView& rows) {
  if (rows.size() <= 0) throw SplitTooShort("cannot fit normalisation on an empty split");
  const auto block = values.middleRows(rows.begin, rows.size());
  NormalizationStats s;
  s.mean = block.colwise().mean().transpose();
  s.std.resize(values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double var = (block.col(c).array() - s.mean(c)).square().mean();
    s.std(c) = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

MatD NormalizationStats::apply(const MatD& values) const {
  require_shape(values.cols() == mean.size(), "normalize: channel count differs from stats");
  return (values.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

MatD NormalizationStats::invert(const MatD& normalized) const {
  require_shape(normalized.cols() == mean.size(), "denormalize: channel count differs from stats");
  return (normalized.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

MultivariateSeries normalize(const MultivariateSeries& series, const NormalizationStats& stats) {
  MultivariateSeries out = series;
  out.values = stats.apply(series.values);
  return out;
}

WindowSet::WindowSet(const MatD& values, SplitView view, Eigen::Index lookback, Eigen::Index horizon,
                     Eigen::Index stride)
    : values_(&values), view_(view), lookback_(lookback), horizon_(horizon), stride_(stride) {
  if (lookback <= 0 || horizon <= 0 || stride <= 0)
    throw SplitTooShort("look-back, horizon and stride must be positive");
  if (view.begin < 0 || view.end > values.rows() || view.size() < lookback + horizon)
    throw SplitTooShort("split of length " + std::to_string(view.size()) + " cannot hold a window of " +
                        std::to_string(lookback) + " + " + std::to_string(horizon) + " steps");
  count_ = (view.size() - lookback - horizon) / stride + 1;
}

WindowBatch WindowSet::gather(const std::vector<Eigen::Index>& indices) const {
  const Eigen::Index n = channels();
  WindowBatch b;
  b.batch = static_cast<Eigen::Index>(indices.size());
  b.channels = n;
  b.lookback = lookback_;
  b.horizon = horizon_;
  b.inputs.resize(b.batch * n, lookback_);
  b.targets.resize(b.batch * n, horizon_);
  for (Eigen::Index w = 0; w < b.batch; ++w) {
    const Eigen::Index k = indices[w];
    if (k < 0 || k >= count_) throw SplitTooShort("window index " + std::to_string(k) + " out of range");
    const Eigen::Index s = start(k);
    b.inputs.middleRows(w * n, n) = values_->middleRows(s, lookback_).transpose();
    b.targets.middleRows(w * n, n) = values_->middleRows(s + lookback_, horizon_).transpose();
  }
  return b;
}

WindowBatch WindowSet::gather_range(Eigen::Index first, Eigen::Index count) const {
  std::vector<Eigen::Index> idx(count);
  for (Eigen::Index i = 0; i < count; ++i) idx[i] = first + i;
  return gather(idx);
}

WindowSet make_windows(const MatD& values, SplitView view, Eigen::Index lookback, Eigen::Index horizon,
                       Eigen::Index stride) {
  return WindowSet(values, view, lookback, horizon, stride);
}

std::pair<MultivariateSeries, Labels> generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_channels < 1 || spec.n_groups < 1 || spec.n_groups > spec.n_channels || spec.steps < 1)
    throw ConfigError("synthetic spec needs 1 <= n_groups <= n_channels and steps >= 1");
  if (!spec.groups.empty() && static_cast<Eigen::Index>(spec.groups.size()) != spec.n_groups)
    throw ConfigError("synthetic spec lists " + std::to_string(spec.groups.size()) + " group signals for " +
                      std::to_string(spec.n_groups) + " groups");

  std::mt19937_64 rng(spec.seed);
  std::vector<GroupSignal> groups = spec.groups;
  if (groups.empty()) {
    std::uniform_real_distribution<double> log_period(std::log(24.0), std::log(200.0));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> slope(-1.0, 1.0);
    for (Eigen::Index g = 0; g < spec.n_groups; ++g) {
      GroupSignal s;
      s.cycles_per_step = 1.0 / std::exp(log_period(rng));
      s.phase = phase(rng);
      s.slope = slope(rng);
      groups.push_back(s);
    }
  }

  MultivariateSeries series;
  series.frequency = Frequency::Hourly;
  series.values.resize(spec.steps, spec.n_channels);
  Labels labels(spec.n_channels);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index c = 0; c < spec.n_channels; ++c) {
    labels[c] = static_cast<int>(c % spec.n_groups);
    series.channel_names.push_back("ch" + std::to_string(c));
  }
  const double denom = static_cast<double>(std::max<Eigen::Index>(spec.steps - 1, 1));
  for (Eigen::Index t = 0; t < spec.steps; ++t) {
    for (Eigen::Index c = 0; c < spec.n_channels; ++c) {
      const auto& g = groups[labels[c]];
      const double base = g.amplitude * std::sin(2.0 * M_PI * g.cycles_per_step * static_cast<double>(t) + g.phase) +
                          g.slope * static_cast<double>(t) / denom;
      // Draw unconditionally so the noise stream does not depend on noise_std.
      const double eps = noise(rng);
      series.values(t, c) = spec.noise_std > 0 ? base + spec.noise_std * eps : base;
    }
    series.timestamps.push_back(std::to_string(t));
  }
  series.split = ratio_split(spec.steps);
  return {std::move(series), std::move(labels)};
}

MatD channel_correlation(const MatD& values, SplitView rows) {
  if (rows.size() < 2) throw SplitTooShort("correlation needs at least two time steps");
  const auto block = values.middleRows(rows.begin, rows.size());
  const MatD centered = block.rowwise() - block.colwise().mean();
  const MatD cov = centered.transpose() * centered;
  const Eigen::Index n = values.cols();
  MatD corr = MatD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) {
        corr(i, j) = 1.0;
        continue;
      }
      const double denom = std::sqrt(cov(i, i) * cov(j, j));
      corr(i, j) = denom > 0 ? std::clamp(cov(i, j) / denom, -1.0, 1.0) : 0.0;
    }
  }
  return corr;
}

}  // namespace dgc::data
