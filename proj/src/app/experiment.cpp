#include "dgc/app/experiment.hpp"

#include "dgc/io/checkpoint.hpp"
#include "dgc/io/files.hpp"
#include "dgc/io/report.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace dgc::app {

namespace {

std::vector<Eigen::Index> horizons_of(const std::vector<SweepCell>& cells) {
  std::vector<Eigen::Index> out;
  for (const auto& c : cells)
    if (std::find(out.begin(), out.end(), c.horizon) == out.end()) out.push_back(c.horizon);
  return out;
}

std::vector<train::Ablation> ablations_of(const std::vector<SweepCell>& cells) {
  std::vector<train::Ablation> out;
  for (const auto& c : cells)
    if (std::find(out.begin(), out.end(), c.ablation) == out.end()) out.push_back(c.ablation);
  return out;
}

const SweepCell* find_cell(const std::vector<SweepCell>& cells, Eigen::Index h, train::Ablation a) {
  for (const auto& c : cells)
    if (c.horizon == h && c.ablation == a) return &c;
  return nullptr;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string run_name(const train::RunReport& r) {
  return r.dataset + "_S" + std::to_string(r.horizon) + "_" + train::to_string(r.ablation) + "_seed" +
         std::to_string(r.seed);
}

RunOutput run_experiment(const io::ExperimentConfig& config, const io::LoadedDataset& dataset,
                         const RunOptions& options) {
  config.validate();
  train::TrainOptions topt;
  topt.config_hash = io::config_hash(config);
  std::ostream* log = options.log;
  if (log) {
    *log << "run " << dataset.data.name << " S=" << config.model.horizon << " ablation="
         << train::to_string(config.train.ablation) << " seed=" << config.train.seed << " hash=" << topt.config_hash
         << "\n";
    topt.on_pretrain_epoch = [log](const train::PretrainRecord& p) {
      *log << "  pretrain " << p.epoch << " rec=" << p.train_rec << " val_rec=" << p.val_rec << "\n";
    };
    topt.on_epoch = [log](const train::EpochRecord& e) {
      *log << "  epoch " << e.epoch << " rec=" << e.train_rec << " ds=" << e.train_ds << " pred=" << e.train_pred
           << " total=" << e.train_total << " val_pred=" << e.val_pred << " clusters=" << e.mask_clusters << " ("
           << fixed(e.seconds, 1) << "s)\n";
    };
  }

  auto result = train::train(config.model, config.train, dataset.data, topt);
  RunOutput out;
  out.report = std::move(result.report);
  out.csv_row = io::metrics_csv_row(out.report);
  if (log)
    *log << "  test mse=" << out.report.test.mse << " mae=" << out.report.test.mae << " best_epoch="
         << out.report.best_epoch << " (" << fixed(out.report.wall_clock_s, 1) << "s)\n";

  if (options.write_outputs) {
    const std::filesystem::path root(config.output_dir);
    out.dir = root / run_name(out.report);
    io::write_file_atomic(out.dir / "report.json", io::to_json(out.report).dump(2) + "\n");
    io::write_file_atomic(out.dir / "config.toml", io::to_toml(config));
    io::save_model(out.dir / "model.ckpt", *result.model, out.report, config);
    io::append_metrics_csv(root / "metrics.csv", out.report);
  }
  return out;
}

io::ExperimentConfig cell_config(const io::ExperimentConfig& config, Eigen::Index horizon, train::Ablation ablation,
                                 std::uint64_t seed) {
  io::ExperimentConfig c = config;
  c.model.horizon = horizon;
  c.train.ablation = ablation;
  c.train.seed = seed;
  return c;
}

SweepResult run_sweep(const io::ExperimentConfig& config, const io::LoadedDataset& dataset, const RunOptions& options) {
  config.validate();
  SweepResult res;
  for (Eigen::Index h : config.sweep.horizons) {
    for (train::Ablation a : config.sweep.ablations) {
      SweepCell cell;
      cell.horizon = h;
      cell.ablation = a;
      for (std::uint64_t seed : config.sweep.seeds) {
        res.runs.push_back(run_experiment(cell_config(config, h, a, seed), dataset, options));
        cell.mse += res.runs.back().report.test.mse;
        cell.mae += res.runs.back().report.test.mae;
        ++cell.runs;
      }
      cell.mse /= cell.runs;
      cell.mae /= cell.runs;
      res.cells.push_back(cell);
    }
  }
  return res;
}

std::string sweep_csv(const std::vector<SweepCell>& cells) {
  const auto hs = horizons_of(cells);
  const auto as = ablations_of(cells);
  std::ostringstream o;
  o << "horizon";
  for (auto a : as) o << "," << train::to_string(a) << "_mse," << train::to_string(a) << "_mae";
  o << "\n";
  o.precision(17);
  for (auto h : hs) {
    o << h;
    for (auto a : as) {
      if (const auto* c = find_cell(cells, h, a)) o << "," << c->mse << "," << c->mae;
      else o << ",,";
    }
    o << "\n";
  }
  return o.str();
}

std::string sweep_table(const std::vector<SweepCell>& cells) {
  const auto hs = horizons_of(cells);
  const auto as = ablations_of(cells);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"horizon"}, sub{""};
  for (auto a : as) {
    head.push_back(train::to_string(a));
    head.push_back("");
    sub.push_back("MSE");
    sub.push_back("MAE");
  }
  rows.push_back(head);
  rows.push_back(sub);
  for (auto h : hs) {
    std::vector<std::string> r{std::to_string(h)};
    for (auto a : as) {
      const auto* c = find_cell(cells, h, a);
      r.push_back(c ? fixed(c->mse, 3) : "-");
      r.push_back(c ? fixed(c->mae, 3) : "-");
    }
    rows.push_back(r);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::ostringstream o;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) o << "  ";
      o << (i ? std::right : std::left) << std::setw(static_cast<int>(width[i])) << r[i];
    }
    o << "\n";
  }
  return o.str();
}

}  // namespace dgc::app
