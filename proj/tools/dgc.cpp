// dgc: command-line front end (train, sweep, inspect-clusters, forecast-plot,
// make-synthetic). Failures print one line "error[Kind]: message" to stderr.

#include "dgc/app/experiment.hpp"
#include "dgc/cluster/dtw.hpp"
#include "dgc/cluster/graph.hpp"
#include "dgc/core/runtime.hpp"
#include "dgc/io/checkpoint.hpp"
#include "dgc/io/files.hpp"
#include "dgc/io/report.hpp"
#include "dgc/io/svg.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace dgc;

namespace {

struct Common {
  std::string config;
  std::string dataset;
  std::string data_dir;
  std::string out;
  std::optional<Eigen::Index> horizon;
  std::string ablation;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "TOML experiment config");
  cmd->add_option("--dataset", c.dataset, "registry name, CSV path or 'synthetic'");
  cmd->add_option("--data-dir", c.data_dir, "dataset root (default $DGC_DATA_DIR, then ./data)");
  cmd->add_option("--horizon", c.horizon, "forecast horizon S");
  cmd->add_option("--ablation", c.ablation, "full, no_gcl, no_rfl, dtw_cluster or ci_only");
  cmd->add_option("--seed", c.seed, "training seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_flag("--quiet", c.quiet, "no progress on stderr");
}

io::ExperimentConfig effective_config(const Common& c) {
  io::ExperimentConfig cfg = c.config.empty() ? io::ExperimentConfig{} : io::load_config(c.config);
  if (!c.dataset.empty()) cfg.dataset = c.dataset;
  if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.horizon) cfg.model.horizon = *c.horizon;
  if (!c.ablation.empty()) cfg.train.ablation = train::ablation_from_string(c.ablation);
  if (c.seed) cfg.train.seed = *c.seed;
  cfg.validate();
  return cfg;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what, T (*convert)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(convert(item));
  }
  if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
  return out;
}

std::uint64_t to_u64(const std::string& s) {
  try {
    std::size_t used = 0;
    if (s.find('-') != std::string::npos) throw std::invalid_argument(s);
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("'" + s + "' is not a non-negative integer");
  }
}

Eigen::Index to_index(const std::string& s) { return static_cast<Eigen::Index>(to_u64(s)); }

int cmd_train(const Common& c) {
  const auto cfg = effective_config(c);
  const auto ds = io::load_dataset(cfg);
  app::RunOptions opt;
  opt.log = c.quiet ? nullptr : &std::cerr;
  const auto out = app::run_experiment(cfg, ds, opt);
  std::cout << io::metrics_csv_header() << "\n" << out.csv_row << "\n";
  std::cout << "outputs: " << out.dir.string() << "\n";
  return 0;
}

int cmd_sweep(const Common& c, const std::string& horizons, const std::string& ablations,
              const std::optional<std::string>& seeds) {
  auto cfg = effective_config(c);
  if (!horizons.empty()) cfg.sweep.horizons = parse_list<Eigen::Index>(horizons, "horizon", to_index);
  else if (c.horizon) cfg.sweep.horizons = {*c.horizon};
  if (!ablations.empty()) cfg.sweep.ablations = parse_list<train::Ablation>(ablations, "ablation", train::ablation_from_string);
  else if (!c.ablation.empty()) cfg.sweep.ablations = {train::ablation_from_string(c.ablation)};
  if (seeds) cfg.sweep.seeds = parse_list<std::uint64_t>(*seeds, "seed", to_u64);
  else if (c.seed) cfg.sweep.seeds = {*c.seed};
  cfg.validate();

  const auto ds = io::load_dataset(cfg);
  app::RunOptions opt;
  opt.log = c.quiet ? nullptr : &std::cerr;
  const auto res = app::run_sweep(cfg, ds, opt);
  const fs::path root(cfg.output_dir);
  const std::string table = app::sweep_table(res.cells);
  io::write_file_atomic(root / "sweep.csv", app::sweep_csv(res.cells));
  io::write_file_atomic(root / "sweep.txt", table);
  std::cout << table;
  return 0;
}

io::ClusterSummary clusters_from_dataset(const io::ExperimentConfig& cfg, const train::PreparedData& data,
                                         std::ostream* log) {
  io::ClusterSummary s;
  const Eigen::Index n = data.values.cols();
  const auto candidates = train::feasible_counts(cfg.train.cluster_counts, n);
  const auto ablation = cfg.train.ablation;
  if (ablation == train::Ablation::CiOnly) {
    s.labels.resize(n);
    std::iota(s.labels.begin(), s.labels.end(), 0);
  } else if (ablation == train::Ablation::DtwCluster) {
    s.labels = cluster::dtw_select(data.values, data.splits.train, candidates, cfg.model.dtw).labels;
  } else {
    const auto w = train::make_split_windows(data, cfg.model.lookback, cfg.model.horizon);
    const MatD adj = cluster::build_graph(data.values, data.splits.train, cfg.model.graph_threshold);
    std::mt19937_64 init(cfg.train.seed), shuffle(cfg.train.seed + 1);
    train::Model<float> model(cfg.model, ablation, n, adj, init);
    if (train::uses_rfl(ablation)) {
      auto cb = [log](const train::PretrainRecord& p) {
        if (log) *log << "  pretrain " << p.epoch << " rec=" << p.train_rec << " val_rec=" << p.val_rec << "\n";
      };
      s.labels = train::pretrain_rfl(model, w.train, w.val, cfg.train, shuffle, cb).choice.clustering.labels;
    } else {
      const MatD codes =
          train::channel_codes(model.latent_codes(train::reference_inputs(w.train, cfg.train.batch_size)), n);
      s.labels = cluster::select_cluster_count(codes, candidates, cfg.train.seed).clustering.labels;
    }
  }
  s.mask = cluster::build_mask(s.labels);
  return s;
}

int cmd_inspect(const Common& c, const std::string& checkpoint) {
  io::ExperimentConfig cfg;
  io::ClusterSummary s;
  std::optional<io::LoadedDataset> ds;
  if (!checkpoint.empty()) {
    auto m = io::load_model(checkpoint);
    cfg = m.config;
    if (!c.dataset.empty()) cfg.dataset = c.dataset;
    if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
    ds = io::load_dataset(cfg);
    if (ds->data.values.cols() != m.model->channels())
      throw ConfigError("dataset has " + std::to_string(ds->data.values.cols()) + " channels but the checkpoint has " +
                        std::to_string(m.model->channels()));
    s.labels = m.labels;
    s.mask = m.mask;
  } else {
    cfg = effective_config(c);
    ds = io::load_dataset(cfg);
    s = clusters_from_dataset(cfg, ds->data, c.quiet ? nullptr : &std::cerr);
  }
  const fs::path out = c.out.empty() ? fs::path(cfg.output_dir) / "clusters" : fs::path(c.out);
  s.channel_names = ds->data.channel_names;
  s.threshold = cfg.model.graph_threshold;
  s.correlation = data::channel_correlation(ds->data.values, ds->data.splits.train);
  if (ds->truth) s.ari = cluster::adjusted_rand_index(s.labels, *ds->truth);

  const auto j = io::to_json(s);
  io::validate_cluster_json(j);
  io::write_file_atomic(out / "clusters.json", j.dump(2) + "\n");
  io::write_file_atomic(out / "correlation.svg",
                        io::heatmap_svg(s.correlation, s.channel_names, ds->data.name + " channel correlation"));
  io::write_file_atomic(out / "mask.svg",
                        io::heatmap_svg(s.mask.cast<double>(), s.channel_names, ds->data.name + " attention mask", 0.0,
                                        1.0));
  std::cout << "labels:";
  for (int l : s.labels) std::cout << " " << l;
  std::cout << "\n";
  if (s.ari) std::cout << "ari: " << *s.ari << "\n";
  std::cout << "outputs: " << out.string() << "\n";
  return 0;
}

int cmd_forecast_plot(const Common& c, const std::string& checkpoint, Eigen::Index window,
                      const std::string& channels) {
  if (checkpoint.empty()) throw ConfigError("--checkpoint is required");
  auto m = io::load_model(checkpoint);
  io::ExperimentConfig cfg = m.config;
  if (!c.dataset.empty()) cfg.dataset = c.dataset;
  if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
  const auto ds = io::load_dataset(cfg);
  const Eigen::Index n = ds.data.values.cols();
  if (n != m.model->channels())
    throw ConfigError("dataset has " + std::to_string(n) + " channels but the checkpoint has " +
                      std::to_string(m.model->channels()));
  const auto w = train::make_split_windows(ds.data, cfg.model.lookback, cfg.model.horizon);
  if (window < 0 || window >= w.test.size())
    throw ConfigError("window " + std::to_string(window) + " is out of range [0, " + std::to_string(w.test.size()) +
                      ")");

  std::vector<Eigen::Index> picked;
  if (channels.empty()) {
    picked.resize(static_cast<std::size_t>(n));
    std::iota(picked.begin(), picked.end(), Eigen::Index{0});
  } else {
    picked = parse_list<Eigen::Index>(channels, "channel", to_index);
    for (auto ch : picked)
      if (ch >= n) throw ConfigError("channel " + std::to_string(ch) + " is out of range [0, " + std::to_string(n) + ")");
  }

  const auto batch = w.test.gather_range(window, 1);
  const MatD yhat = cast<double>(train::predict(*m.model, batch.inputs, m.mask));
  // Back to the units of the source data: steps x channels.
  const MatD hist = ds.data.stats.invert(batch.inputs.transpose());
  const MatD truth = ds.data.stats.invert(batch.targets.transpose());
  const MatD pred = ds.data.stats.invert(yhat.transpose());

  std::vector<io::ForecastPanel> panels;
  for (auto ch : picked) {
    io::ForecastPanel p;
    p.name = ds.data.channel_names[ch];
    p.history.resize(hist.rows());
    p.truth.resize(truth.rows());
    p.forecast.resize(pred.rows());
    for (Eigen::Index t = 0; t < hist.rows(); ++t) p.history[t] = hist(t, ch);
    for (Eigen::Index t = 0; t < truth.rows(); ++t) p.truth[t] = truth(t, ch);
    for (Eigen::Index t = 0; t < pred.rows(); ++t) p.forecast[t] = pred(t, ch);
    panels.push_back(std::move(p));
  }
  const fs::path out = c.out.empty() ? fs::path(checkpoint).parent_path() : fs::path(c.out);
  const std::string stem = "forecast_w" + std::to_string(window);
  io::write_file_atomic(out / (stem + ".svg"),
                        io::forecast_svg(panels, ds.data.name + " test window " + std::to_string(window)));
  io::write_forecast_csv(out / (stem + ".csv"), pred, ds.data.channel_names);
  std::cout << "outputs: " << (out / (stem + ".svg")).string() << "\n";
  return 0;
}

int cmd_make_synthetic(const data::SyntheticSpec& spec, const std::string& out) {
  auto [series, labels] = data::generate_synthetic(spec);
  const fs::path path = out.empty() ? fs::path("synthetic.csv") : fs::path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  data::write_csv(path, series.values, series.channel_names);
  nlohmann::json j;
  j["channels"] = series.channel_names;
  j["labels"] = labels;
  j["spec"] = {{"n_channels", spec.n_channels},
               {"n_groups", spec.n_groups},
               {"steps", spec.steps},
               {"seed", spec.seed},
               {"noise_std", spec.noise_std}};
  fs::path lpath = path;
  lpath.replace_extension(".labels.json");
  io::write_file_atomic(lpath, j.dump(2) + "\n");
  std::cout << "outputs: " << path.string() << " " << lpath.string() << "\n";
  return 0;
}

int fail(const std::string& kind, const std::string& what) {
  std::string line = what;
  std::replace(line.begin(), line.end(), '\n', ' ');
  std::cerr << "error[" << kind << "]: " << line << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Channel-clustered patch transformer forecasting"};
  app.name("dgc");
  app.require_subcommand(1, 1);

  Common train_c, sweep_c, inspect_c, plot_c;
  auto* train_cmd = app.add_subcommand("train", "train one configuration");
  add_common(train_cmd, train_c);

  auto* sweep_cmd = app.add_subcommand("sweep", "run a horizon x ablation x seed grid");
  add_common(sweep_cmd, sweep_c);
  std::string horizons, ablations;
  std::optional<std::string> seeds;
  sweep_cmd->add_option("--horizons", horizons, "comma-separated horizons (default: [sweep] section)");
  sweep_cmd->add_option("--ablations", ablations, "comma-separated variants");
  sweep_cmd->add_option("--seeds", seeds, "comma-separated seeds");

  auto* inspect_cmd = app.add_subcommand("inspect-clusters", "channel correlation, labels and mask");
  add_common(inspect_cmd, inspect_c);
  std::string inspect_ckpt;
  inspect_cmd->add_option("--checkpoint", inspect_ckpt, "model.ckpt written by train");

  auto* plot_cmd = app.add_subcommand("forecast-plot", "plot one test window");
  add_common(plot_cmd, plot_c);
  std::string plot_ckpt, plot_channels;
  Eigen::Index plot_window = 0;
  plot_cmd->add_option("--checkpoint", plot_ckpt, "model.ckpt written by train")->required();
  plot_cmd->add_option("--window", plot_window, "test window index");
  plot_cmd->add_option("--channels", plot_channels, "comma-separated channel indices (default all)");

  auto* syn_cmd = app.add_subcommand("make-synthetic", "write a planted-group CSV");
  data::SyntheticSpec spec;
  std::string syn_out;
  syn_cmd->add_option("--channels", spec.n_channels, "channel count");
  syn_cmd->add_option("--groups", spec.n_groups, "group count");
  syn_cmd->add_option("--steps", spec.steps, "time steps");
  syn_cmd->add_option("--noise", spec.noise_std, "noise standard deviation");
  syn_cmd->add_option("--seed", spec.seed, "generator seed");
  syn_cmd->add_option("--out", syn_out, "CSV path (labels go next to it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("Usage", e.what());
  }

  try {
    if (*train_cmd) return cmd_train(train_c);
    if (*sweep_cmd) return cmd_sweep(sweep_c, horizons, ablations, seeds);
    if (*inspect_cmd) return cmd_inspect(inspect_c, inspect_ckpt);
    if (*plot_cmd) return cmd_forecast_plot(plot_c, plot_ckpt, plot_window, plot_channels);
    if (*syn_cmd) return cmd_make_synthetic(spec, syn_out);
  } catch (const NonFiniteLoss& e) {
    fail(e.kind(), e.what());
    return 2;
  } catch (const NonFiniteActivation& e) {
    fail(e.kind(), e.what());
    return 2;
  } catch (const Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail("Internal", e.what());
  }
  return 1;
}
