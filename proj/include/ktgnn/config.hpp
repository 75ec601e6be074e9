#pragma once

#include "ktgnn/baselines.hpp"
#include "ktgnn/metrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ktgnn {

enum class ModelKind { KTGNN, GCN, MLP };

ModelKind parse_model(std::string_view s);
std::string_view to_string(ModelKind m);

struct Ablations {
  bool no_dafc = false;
  bool no_damp = false;
  bool no_dtc = false;
  bool no_dist_loss = false;
  bool no_kl_loss = false;

  /// Sets one flag by its name ("no_dafc", ...). Throws UsageError.
  void set(std::string_view name);
  [[nodiscard]] std::vector<std::string> active() const;
};

struct TrainConfig {
  ModelKind model = ModelKind::KTGNN;
  CompletionStrategy completion = CompletionStrategy::MeanOfNeighbors;  // baselines only
  int hidden_dim = 64;
  int att_dim = 0;  // 0: same as hidden_dim
  int epochs = 300;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  double lambda = 1.0;
  double gamma = 1.0;
  int K = 2;
  int num_layers = 2;  // DAMP layers for ktgnn, GCN layers for gcn
  double dropout = 0.0;
  std::uint64_t seed = 0;
  Ablations ablate;
  bool raw_scores = false;
  bool stop_kl_teacher_grad = true;
  double cross_edge_drop = 0.0;
  bool silent_only = false;
  bool use_file_split = false;
  F1Mode f1_mode = F1Mode::Macro;

  /// Throws UsageError on out-of-range values.
  void validate() const;

  [[nodiscard]] double effective_lambda() const { return ablate.no_kl_loss ? 0.0 : lambda; }
  [[nodiscard]] double effective_gamma() const { return ablate.no_dist_loss ? 0.0 : gamma; }
  [[nodiscard]] int effective_att_dim() const { return att_dim > 0 ? att_dim : hidden_dim; }
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults; unknown keys are an error.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Applies one "key=value" style override, where key is a JSON field name.
void apply_override(TrainConfig& cfg, const std::string& key, const nlohmann::json& value);

/// Stateless 64-bit mixer used to derive independent seeds from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ktgnn
