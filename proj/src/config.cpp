#include "ktgnn/config.hpp"

#include "ktgnn/errors.hpp"

namespace ktgnn {

using nlohmann::json;

ModelKind parse_model(std::string_view s) {
  if (s == "ktgnn") return ModelKind::KTGNN;
  if (s == "gcn") return ModelKind::GCN;
  if (s == "mlp") return ModelKind::MLP;
  throw UsageError("unknown model '" + std::string(s) + "'");
}

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::GCN: return "gcn";
    case ModelKind::MLP: return "mlp";
    case ModelKind::KTGNN: break;
  }
  return "ktgnn";
}

void Ablations::set(std::string_view name) {
  if (name == "no_dafc") no_dafc = true;
  else if (name == "no_damp") no_damp = true;
  else if (name == "no_dtc") no_dtc = true;
  else if (name == "no_dist_loss") no_dist_loss = true;
  else if (name == "no_kl_loss") no_kl_loss = true;
  else throw UsageError("unknown ablation '" + std::string(name) + "'");
}

std::vector<std::string> Ablations::active() const {
  std::vector<std::string> out;
  if (no_dafc) out.emplace_back("no_dafc");
  if (no_damp) out.emplace_back("no_damp");
  if (no_dtc) out.emplace_back("no_dtc");
  if (no_dist_loss) out.emplace_back("no_dist_loss");
  if (no_kl_loss) out.emplace_back("no_kl_loss");
  return out;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw UsageError("config: " + m); };
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (att_dim < 0) fail("att_dim must be >= 0");
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (lambda < 0.0) fail("lambda must be >= 0");
  if (gamma < 0.0) fail("gamma must be >= 0");
  if (K < 1) fail("K must be >= 1");
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0) fail("dropout must lie in [0, 1)");
  if (cross_edge_drop < 0.0 || cross_edge_drop > 1.0) fail("cross_edge_drop must lie in [0, 1]");
}

json to_json(const TrainConfig& c) {
  return json{{"model", to_string(c.model)},
              {"completion", to_string(c.completion)},
              {"hidden_dim", c.hidden_dim},
              {"att_dim", c.att_dim},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"weight_decay", c.weight_decay},
              {"lambda", c.lambda},
              {"gamma", c.gamma},
              {"K", c.K},
              {"num_layers", c.num_layers},
              {"dropout", c.dropout},
              {"seed", c.seed},
              {"ablate", c.ablate.active()},
              {"raw_scores", c.raw_scores},
              {"stop_kl_teacher_grad", c.stop_kl_teacher_grad},
              {"cross_edge_drop", c.cross_edge_drop},
              {"silent_only", c.silent_only},
              {"use_file_split", c.use_file_split},
              {"f1_mode", to_string(c.f1_mode)}};
}

void apply_override(TrainConfig& c, const std::string& key, const json& v) {
  try {
    if (key == "model") c.model = parse_model(v.get<std::string>());
    else if (key == "completion") c.completion = parse_completion(v.get<std::string>());
    else if (key == "hidden_dim") c.hidden_dim = v.get<int>();
    else if (key == "att_dim") c.att_dim = v.get<int>();
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "weight_decay") c.weight_decay = v.get<double>();
    else if (key == "lambda") c.lambda = v.get<double>();
    else if (key == "gamma") c.gamma = v.get<double>();
    else if (key == "K") c.K = v.get<int>();
    else if (key == "num_layers") c.num_layers = v.get<int>();
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "ablate") {
      c.ablate = {};
      if (v.is_string()) {
        c.ablate.set(v.get<std::string>());
      } else {
        for (const auto& a : v) c.ablate.set(a.get<std::string>());
      }
    } else if (key == "raw_scores") c.raw_scores = v.get<bool>();
    else if (key == "stop_kl_teacher_grad") c.stop_kl_teacher_grad = v.get<bool>();
    else if (key == "cross_edge_drop") c.cross_edge_drop = v.get<double>();
    else if (key == "silent_only") c.silent_only = v.get<bool>();
    else if (key == "use_file_split") c.use_file_split = v.get<bool>();
    else if (key == "f1_mode") c.f1_mode = parse_f1_mode(v.get<std::string>());
    else throw UsageError("config: unknown key '" + key + "'");
  } catch (const json::exception& e) {
    throw UsageError("config: bad value for '" + key + "': " + e.what());
  }
}

TrainConfig train_config_from_json(const json& j, TrainConfig base) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) apply_override(base, key, value);
  base.validate();
  return base;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ktgnn
