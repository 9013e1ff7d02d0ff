#include "dgc/io/checkpoint.hpp"

#include "dgc/io/files.hpp"

#include <bit>
#include <cstring>
#include <random>
#include <sstream>

namespace dgc::io {

namespace {

constexpr std::string_view kMagic = "DGCCKPT";

static_assert(std::endian::native == std::endian::little, "checkpoints are stored little-endian");

nlohmann::json mask_json(const MaskMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(static_cast<int>(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

MaskMatrix mask_from_json(const nlohmann::json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  MaskMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (j[i].size() != static_cast<std::size_t>(n)) throw CheckpointError("mask must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = static_cast<std::uint8_t>(j[i][k].get<int>() != 0);
  }
  return m;
}

}  // namespace

const MatF* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return &m;
  return nullptr;
}

void write_checkpoint(const std::filesystem::path& path, nlohmann::json header,
                      const std::vector<std::pair<std::string, const MatF*>>& tensors) {
  header["schema_version"] = kCheckpointSchema;
  header["tensors"] = nlohmann::json::array();
  std::size_t floats = 0;
  for (const auto& [name, m] : tensors) {
    header["tensors"].push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    floats += static_cast<std::size_t>(m->size());
  }
  const std::string h = header.dump();
  std::string bytes;
  bytes.reserve(h.size() + floats * sizeof(float) + 32);
  bytes.append(kMagic).append("\n").append(std::to_string(h.size())).append("\n").append(h);
  for (const auto& [name, m] : tensors)
    bytes.append(reinterpret_cast<const char*>(m->data()), static_cast<std::size_t>(m->size()) * sizeof(float));
  write_file_atomic(path, bytes);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
  const std::string where = " in checkpoint " + path.string();
  std::size_t pos = 0;
  auto line = [&]() {
    const auto end = bytes.find('\n', pos);
    if (end == std::string::npos) throw CheckpointError("truncated preamble" + where);
    std::string s = bytes.substr(pos, end - pos);
    pos = end + 1;
    return s;
  };
  if (line() != kMagic) throw CheckpointError("bad magic" + where);
  std::size_t hlen = 0;
  try {
    hlen = std::stoul(line());
  } catch (const std::exception&) {
    throw CheckpointError("bad header length" + where);
  }
  if (pos + hlen > bytes.size()) throw CheckpointError("truncated header" + where);

  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(bytes.substr(pos, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad header JSON") + where + ": " + e.what());
  }
  pos += hlen;
  if (ck.header.value("schema_version", 0) != kCheckpointSchema)
    throw CheckpointError("unsupported schema_version" + where);
  try {
    for (const auto& t : ck.header.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw CheckpointError("negative tensor shape" + where);
      const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(float);
      if (pos + n > bytes.size()) throw CheckpointError("truncated payload" + where);
      MatF m(rows, cols);
      std::memcpy(m.data(), bytes.data() + pos, n);
      pos += n;
      ck.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad tensor table") + where + ": " + e.what());
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes" + where);
  return ck;
}

void save_model(const std::filesystem::path& path, const train::Model<float>& model, const train::RunReport& report,
                const ExperimentConfig& config) {
  nlohmann::json h;
  h["format"] = "dgc-checkpoint";
  h["config_hash"] = report.config_hash;
  h["config"] = to_toml(config);
  h["dataset"] = report.dataset;
  h["ablation"] = train::to_string(report.ablation);
  h["channels"] = model.channels();
  h["gcl_clusters"] = model.clusters();
  h["epoch"] = report.best_epoch;
  h["metrics"] = {{"test_mse", report.test.mse}, {"test_mae", report.test.mae}, {"best_val_pred", report.best_val_pred}};
  h["labels"] = report.labels;
  h["mask"] = mask_json(report.mask);

  const MatF adjacency = cast<float>(model.adjacency());
  std::vector<std::pair<std::string, const MatF*>> tensors{{"graph.adjacency", &adjacency}};
  for (const auto& p : model.params()) tensors.emplace_back(p.name, &p.value);
  write_checkpoint(path, std::move(h), tensors);
}

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ck = read_checkpoint(path);
  LoadedModel out;
  out.header = ck.header;
  try {
    out.config = parse_config(ck.header.at("config").get<std::string>(), path.string() + "[config]");
    const auto channels = ck.header.at("channels").get<Eigen::Index>();
    const auto clusters = ck.header.at("gcl_clusters").get<Eigen::Index>();
    const train::Ablation ablation = train::ablation_from_string(ck.header.at("ablation").get<std::string>());
    out.labels = ck.header.at("labels").get<Labels>();
    out.mask = mask_from_json(ck.header.at("mask"));

    const MatF* adj = ck.find("graph.adjacency");
    if (!adj || adj->rows() != channels || adj->cols() != channels)
      throw CheckpointError("missing or misshapen graph.adjacency in " + path.string());
    std::mt19937_64 rng(0);  // values are overwritten below
    out.model = std::make_unique<train::Model<float>>(out.config.model, ablation, channels, cast<double>(*adj), rng);
    if (clusters > 0) out.model->attach_clustering(MatD::Zero(clusters, out.config.model.l2), rng);

    for (auto& p : out.model->params()) {
      const MatF* m = ck.find(p.name);
      if (!m) throw CheckpointError("checkpoint lacks parameter " + p.name);
      if (m->rows() != p.value.rows() || m->cols() != p.value.cols())
        throw CheckpointError("shape mismatch for parameter " + p.name);
      p.value = *m;
    }
    if (out.mask.rows() != channels) throw CheckpointError("mask size does not match channel count");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace dgc::io
