#include "dgc/io/config.hpp"

#include <toml.hpp>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace dgc::io {

namespace {

using train::Ablation;

class Section {
 public:
  Section(const toml::table* table, std::string path) : table_(table), path_(std::move(path)) {}

  std::string key_name(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const toml::node* node(std::string_view key) {
    seen_.insert(std::string(key));
    return table_ ? table_->get(key) : nullptr;
  }

  Section sub(std::string_view key) {
    const toml::node* n = node(key);
    if (n && !n->is_table()) throw ConfigError(key_name(key) + " must be a table");
    return Section(n ? n->as_table() : nullptr, key_name(key));
  }

  void read(std::string_view key, bool& out) {
    if (const auto* n = node(key)) {
      if (!n->is_boolean()) throw type_error(key, "a boolean");
      out = n->as_boolean()->get();
    }
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* n = node(key)) {
      if (!n->is_string()) throw type_error(key, "a string");
      out = n->as_string()->get();
    }
  }

  void read(std::string_view key, double& out) {
    if (const auto* n = node(key)) out = as_double(*n, key);
  }

  template <typename I>
    requires std::is_integral_v<I>
  void read(std::string_view key, I& out) {
    if (const auto* n = node(key)) out = as_integer<I>(*n, key);
  }

  template <typename I>
  void read(std::string_view key, std::vector<I>& out) {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw type_error(key, "an array");
      out.clear();
      for (const auto& v : *arr) out.push_back(as_integer<I>(v, key));
    }
  }

  void read(std::string_view key, Ablation& out) {
    std::string s = train::to_string(out);
    read(key, s);
    out = train::ablation_from_string(s);
  }

  void read(std::string_view key, std::vector<Ablation>& out) {
    if (const auto* n = node(key)) {
      const auto* arr = n->as_array();
      if (!arr) throw type_error(key, "an array of strings");
      out.clear();
      for (const auto& v : *arr) {
        if (!v.is_string()) throw type_error(key, "an array of strings");
        out.push_back(train::ablation_from_string(v.as_string()->get()));
      }
    }
  }

  void read(std::string_view key, train::ClusterRefresh& out) {
    std::string s = train::to_string(out);
    read(key, s);
    out = train::cluster_refresh_from_string(s);
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_)
      if (!seen_.count(std::string(k.str()))) throw ConfigError("unknown config key '" + key_name(k.str()) + "'");
  }

 private:
  ConfigError type_error(std::string_view key, const char* what) const {
    return ConfigError(key_name(key) + " must be " + what);
  }

  double as_double(const toml::node& n, std::string_view key) const {
    if (n.is_floating_point()) return n.as_floating_point()->get();
    if (n.is_integer()) return static_cast<double>(n.as_integer()->get());
    throw type_error(key, "a number");
  }

  template <typename I>
  I as_integer(const toml::node& n, std::string_view key) const {
    if (!n.is_integer()) throw type_error(key, "an integer");
    const std::int64_t v = n.as_integer()->get();
    if constexpr (std::is_unsigned_v<I>) {
      if (v < 0) throw ConfigError(key_name(key) + " must be non-negative");
    }
    if (static_cast<std::int64_t>(static_cast<I>(v)) != v) throw ConfigError(key_name(key) + " is out of range");
    return static_cast<I>(v);
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

template <typename V, typename F>
std::string list(const std::vector<V>& values, F fmt) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + fmt(values[i]);
  return s + "]";
}

}  // namespace

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset must not be empty");
  model.validate();
  train.validate();
  if (synthetic.n_groups < 1 || synthetic.n_groups > synthetic.n_channels || synthetic.steps < 1)
    throw ConfigError("synthetic needs 1 <= n_groups <= n_channels and steps >= 1");
  if (synthetic.noise_std < 0) throw ConfigError("synthetic.noise_std must be non-negative");
  if (sweep.horizons.empty()) throw ConfigError("sweep.horizons must not be empty");
  if (sweep.ablations.empty()) throw ConfigError("sweep.ablations must not be empty");
  if (sweep.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
  for (auto h : sweep.horizons)
    if (h < 1) throw ConfigError("sweep horizons must be positive");
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(os.str());
  }

  ExperimentConfig c;
  Section top(&root, "");
  top.read("dataset", c.dataset);
  top.read("data_dir", c.data_dir);
  top.read("output_dir", c.output_dir);
  top.read("forward_fill", c.forward_fill);

  Section m = top.sub("model");
  m.read("lookback", c.model.lookback);
  m.read("horizon", c.model.horizon);
  m.read("instance_norm", c.model.instance_norm);
  m.read("l1", c.model.l1);
  m.read("l2", c.model.l2);
  m.read("epsilon", c.model.epsilon);
  m.read("graph_threshold", c.model.graph_threshold);
  Section p = m.sub("patch");
  p.read("patch_len", c.model.patch.patch_len);
  p.read("stride", c.model.patch.stride);
  p.read("d_model", c.model.patch.d_model);
  p.read("n_heads", c.model.patch.n_heads);
  p.read("n_layers", c.model.patch.n_layers);
  p.read("dropout", c.model.patch.dropout);
  p.reject_unknown();
  Section d = m.sub("dtw");
  d.read("max_steps", c.model.dtw.max_steps);
  d.read("band", c.model.dtw.band);
  d.reject_unknown();
  m.reject_unknown();

  Section t = top.sub("train");
  t.read("lambda1", c.train.lambda1);
  t.read("lambda2", c.train.lambda2);
  t.read("lr", c.train.lr);
  t.read("batch_size", c.train.batch_size);
  t.read("max_epochs", c.train.max_epochs);
  t.read("patience", c.train.patience);
  t.read("seed", c.train.seed);
  t.read("cluster_counts", c.train.cluster_counts);
  t.read("ablation", c.train.ablation);
  t.read("pretrain_epochs", c.train.pretrain_epochs);
  t.read("pretrain_lr", c.train.pretrain_lr);
  t.read("cluster_refresh", c.train.cluster_refresh);
  t.read("max_batches_per_epoch", c.train.max_batches_per_epoch);
  t.read("max_eval_windows", c.train.max_eval_windows);
  t.reject_unknown();

  Section s = top.sub("synthetic");
  s.read("n_channels", c.synthetic.n_channels);
  s.read("n_groups", c.synthetic.n_groups);
  s.read("steps", c.synthetic.steps);
  s.read("seed", c.synthetic.seed);
  s.read("noise_std", c.synthetic.noise_std);
  s.reject_unknown();

  Section w = top.sub("sweep");
  w.read("horizons", c.sweep.horizons);
  w.read("ablations", c.sweep.ablations);
  w.read("seeds", c.sweep.seeds);
  w.reject_unknown();

  top.reject_unknown();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_toml(const ExperimentConfig& c) {
  const auto integer = [](auto v) { return std::to_string(v); };
  std::ostringstream o;
  o << "dataset = " << quoted(c.dataset) << "\n"
    << "data_dir = " << quoted(c.data_dir) << "\n"
    << "output_dir = " << quoted(c.output_dir) << "\n"
    << "forward_fill = " << (c.forward_fill ? "true" : "false") << "\n\n";

  const auto& m = c.model;
  o << "[model]\n"
    << "lookback = " << m.lookback << "\n"
    << "horizon = " << m.horizon << "\n"
    << "instance_norm = " << (m.instance_norm ? "true" : "false") << "\n"
    << "l1 = " << m.l1 << "\n"
    << "l2 = " << m.l2 << "\n"
    << "epsilon = " << number(m.epsilon) << "\n"
    << "graph_threshold = " << number(m.graph_threshold) << "\n\n";
  o << "[model.patch]\n"
    << "patch_len = " << m.patch.patch_len << "\n"
    << "stride = " << m.patch.stride << "\n"
    << "d_model = " << m.patch.d_model << "\n"
    << "n_heads = " << m.patch.n_heads << "\n"
    << "n_layers = " << m.patch.n_layers << "\n"
    << "dropout = " << number(m.patch.dropout) << "\n\n";
  o << "[model.dtw]\n"
    << "max_steps = " << m.dtw.max_steps << "\n"
    << "band = " << m.dtw.band << "\n\n";

  const auto& t = c.train;
  o << "[train]\n"
    << "lambda1 = " << number(t.lambda1) << "\n"
    << "lambda2 = " << number(t.lambda2) << "\n"
    << "lr = " << number(t.lr) << "\n"
    << "batch_size = " << t.batch_size << "\n"
    << "max_epochs = " << t.max_epochs << "\n"
    << "patience = " << t.patience << "\n"
    << "seed = " << t.seed << "\n"
    << "cluster_counts = " << list(t.cluster_counts, integer) << "\n"
    << "ablation = " << quoted(train::to_string(t.ablation)) << "\n"
    << "pretrain_epochs = " << t.pretrain_epochs << "\n"
    << "pretrain_lr = " << number(t.pretrain_lr) << "\n"
    << "cluster_refresh = " << quoted(train::to_string(t.cluster_refresh)) << "\n"
    << "max_batches_per_epoch = " << t.max_batches_per_epoch << "\n"
    << "max_eval_windows = " << t.max_eval_windows << "\n\n";

  const auto& s = c.synthetic;
  o << "[synthetic]\n"
    << "n_channels = " << s.n_channels << "\n"
    << "n_groups = " << s.n_groups << "\n"
    << "steps = " << s.steps << "\n"
    << "seed = " << s.seed << "\n"
    << "noise_std = " << number(s.noise_std) << "\n\n";

  o << "[sweep]\n"
    << "horizons = " << list(c.sweep.horizons, integer) << "\n"
    << "ablations = " << list(c.sweep.ablations, [](Ablation a) { return quoted(train::to_string(a)); }) << "\n"
    << "seeds = " << list(c.sweep.seeds, integer) << "\n";
  return o.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_toml(config))));
  return buf;
}

}  // namespace dgc::io
