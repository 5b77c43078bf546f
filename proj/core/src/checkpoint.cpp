#include "scaservo/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace scaservo {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "scaservo-checkpoint";
constexpr int kVersion = 1;

json net_to_json(const Mlp& net) {
  json layers = json::array();
  for (size_t l = 0; l < net.weights().size(); ++l) {
    const Mat& W = net.weights()[l];
    const Vec& b = net.biases()[l];
    json rows = json::array();
    for (int r = 0; r < W.rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < W.cols(); ++c) row.push_back(W(r, c));
      rows.push_back(std::move(row));
    }
    json bias = json::array();
    for (int i = 0; i < b.size(); ++i) bias.push_back(b[i]);
    layers.push_back({{"W", std::move(rows)}, {"b", std::move(bias)}});
  }
  return layers;
}

Mlp net_from_json(const json& layers, const std::string& name) {
  if (!layers.is_array() || layers.empty())
    throw CheckpointError("checkpoint: \"" + name + "\" must be a layer array");
  std::vector<Mat> W;
  std::vector<Vec> b;
  for (const json& layer : layers) {
    if (!layer.is_object() || !layer.contains("W") || !layer.contains("b"))
      throw CheckpointError("checkpoint: malformed layer in \"" + name + "\"");
    const json& rows = layer["W"];
    const json& bias = layer["b"];
    if (!rows.is_array() || rows.empty() || !bias.is_array())
      throw CheckpointError("checkpoint: malformed layer in \"" + name + "\"");
    const size_t n_rows = rows.size();
    const size_t n_cols = rows[0].is_array() ? rows[0].size() : 0;
    if (n_cols == 0 || bias.size() != n_rows)
      throw CheckpointError("checkpoint: inconsistent shapes in \"" + name + "\"");
    Mat Wl(static_cast<int>(n_rows), static_cast<int>(n_cols));
    for (size_t r = 0; r < n_rows; ++r) {
      if (!rows[r].is_array() || rows[r].size() != n_cols)
        throw CheckpointError("checkpoint: ragged weight matrix in \"" + name + "\"");
      for (size_t c = 0; c < n_cols; ++c) {
        if (!rows[r][c].is_number())
          throw CheckpointError("checkpoint: non-numeric weight in \"" + name + "\"");
        Wl(static_cast<int>(r), static_cast<int>(c)) = rows[r][c].get<double>();
      }
    }
    Vec bl(static_cast<int>(n_rows));
    for (size_t i = 0; i < n_rows; ++i) {
      if (!bias[i].is_number())
        throw CheckpointError("checkpoint: non-numeric bias in \"" + name + "\"");
      bl[static_cast<int>(i)] = bias[i].get<double>();
    }
    W.push_back(std::move(Wl));
    b.push_back(std::move(bl));
  }
  try {
    return Mlp::from_params(std::move(W), std::move(b));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError("checkpoint: \"" + name + "\": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const SacNets& nets,
                     const Normalizer& norm, const RunConfig& cfg) {
  json j;
  j["magic"] = kMagic;
  j["version"] = kVersion;
  j["config_hash"] = config_signature_hash(cfg);
  j["state_dim"] = nets.state_dim();
  j["action_dim"] = nets.action_dim();
  j["log_alpha"] = nets.log_alpha;
  j["normalizer"] = {{"offset", norm.offset}, {"scale", norm.scale}};
  j["actor"] = net_to_json(nets.actor);
  j["critic1"] = net_to_json(nets.critic1);
  j["critic2"] = net_to_json(nets.critic2);
  j["target1"] = net_to_json(nets.target1);
  j["target2"] = net_to_json(nets.target2);

  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out << j.dump() << "\n";
  if (!out) throw CheckpointError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path, const RunConfig& expected) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint parse error in " + path + ": " + e.what());
  }

  if (!j.is_object() || !j.contains("magic") || j["magic"] != kMagic)
    throw CheckpointError("not a checkpoint file: " + path);
  if (!j.contains("version") || j["version"] != kVersion)
    throw CheckpointError("unsupported checkpoint version in " + path);

  const std::uint64_t want = config_signature_hash(expected);
  if (!j.contains("config_hash") ||
      j["config_hash"].get<std::uint64_t>() != want)
    throw CheckpointError(
        "checkpoint was trained under a different configuration (hash "
        "mismatch): " +
        path);

  Checkpoint ck;
  ck.config_hash = want;
  ck.nets.actor = net_from_json(j.at("actor"), "actor");
  ck.nets.critic1 = net_from_json(j.at("critic1"), "critic1");
  ck.nets.critic2 = net_from_json(j.at("critic2"), "critic2");
  ck.nets.target1 = net_from_json(j.at("target1"), "target1");
  ck.nets.target2 = net_from_json(j.at("target2"), "target2");
  if (!j.contains("log_alpha") || !j["log_alpha"].is_number())
    throw CheckpointError("checkpoint missing log_alpha: " + path);
  ck.nets.log_alpha = j["log_alpha"].get<double>();

  if (j.at("state_dim").get<int>() != ck.nets.actor.input_dim() ||
      j.at("action_dim").get<int>() * 2 != ck.nets.actor.output_dim())
    throw CheckpointError("checkpoint dims disagree with stored layers: " + path);
  if (ck.nets.actor.input_dim() != kStateDim)
    throw CheckpointError("checkpoint state dimension unsupported: " + path);
  if (ck.nets.critic1.input_dim() != kStateDim + kActionDim)
    throw CheckpointError("checkpoint critic dimension unsupported: " + path);

  const json& n = j.at("normalizer");
  const auto off = n.at("offset");
  const auto sc = n.at("scale");
  if (!off.is_array() || off.size() != kStateDim || !sc.is_array() ||
      sc.size() != kStateDim)
    throw CheckpointError("checkpoint normalizer has wrong arity: " + path);
  for (int i = 0; i < kStateDim; ++i) {
    ck.normalizer.offset[static_cast<size_t>(i)] = off[i].get<double>();
    ck.normalizer.scale[static_cast<size_t>(i)] = sc[i].get<double>();
  }
  return ck;
}

}  // namespace scaservo
