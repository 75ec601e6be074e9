#pragma once

// Trainable models behind one interface so the training loop, metrics and
// checkpoints are shared between KTGNN and the baselines.

#include "ktgnn/baselines.hpp"
#include "ktgnn/config.hpp"
#include "ktgnn/dafc.hpp"
#include "ktgnn/damp.hpp"
#include "ktgnn/dtc.hpp"
#include "ktgnn/graph.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ktgnn {

struct LossTerms {
  double total = 0.0;
  double clf = 0.0;
  double kl = 0.0;
  double dist = 0.0;
  double clf_source = 0.0;
  double clf_target = 0.0;
  double clf_generated = 0.0;
};

/// Positive-class probabilities on every node. `source`/`target` are only
/// produced by models with a transferable classifier head.
struct NodeScores {
  std::vector<double> generated;
  std::optional<std::vector<double>> source;
  std::optional<std::vector<double>> target;
};

struct ForwardResult {
  ad::Tensor loss;
  LossTerms terms;
  NodeScores scores;
};

class Model {
 public:
  virtual ~Model() = default;
  [[nodiscard]] virtual const ParamSet& params() const = 0;
  [[nodiscard]] virtual const VSGraph& graph() const = 0;
  /// `training` enables dropout; `step_seed` seeds it.
  virtual ForwardResult forward(bool training, std::uint64_t step_seed) = 0;
};

/// The full pipeline: feature completion -> message passing -> classifier
/// transfer, with ablation switches from the config.
class KTGNNModel final : public Model {
 public:
  KTGNNModel(VSGraph graph, const TrainConfig& cfg, std::uint64_t init_seed);

  [[nodiscard]] const ParamSet& params() const override { return params_; }
  [[nodiscard]] const VSGraph& graph() const override { return graph_; }
  ForwardResult forward(bool training, std::uint64_t step_seed) override;

  /// Completion output for the current parameters (zero-completion under no_dafc).
  [[nodiscard]] CompletionResult complete() const;

  [[nodiscard]] const DAFCParams& dafc() const { return dafc_; }
  [[nodiscard]] std::vector<DAMPLayerParams>& damp_layers() { return layers_; }
  [[nodiscard]] const DTCParams& dtc() const { return dtc_; }

 private:
  VSGraph graph_;
  TrainConfig cfg_;
  PopulationMeans means_;
  CompletionPlan completion_plan_;
  MessagePlan message_plan_;
  DAFCParams dafc_;
  std::vector<DAMPLayerParams> layers_;
  DTCParams dtc_;
  LinearClassifier single_head_;  // used when the transferable classifier is ablated
  ParamSet params_;
};

/// GCN or MLP over a heuristic completion, trained with one BCE over all
/// labeled train nodes.
class BaselineModel final : public Model {
 public:
  BaselineModel(VSGraph graph, const TrainConfig& cfg, std::uint64_t init_seed);

  [[nodiscard]] const ParamSet& params() const override { return params_; }
  [[nodiscard]] const VSGraph& graph() const override { return graph_; }
  ForwardResult forward(bool training, std::uint64_t step_seed) override;

 private:
  VSGraph graph_;
  TrainConfig cfg_;
  Mat features_;
  NormalizedAdjacency adjacency_;
  std::optional<GCNParams> gcn_;
  std::optional<MLPParams> mlp_;
  ParamSet params_;
};

std::unique_ptr<Model> make_model(const VSGraph& g, const TrainConfig& cfg, std::uint64_t init_seed);

/// Train-split labeled nodes of both populations with their labels.
struct LabeledSet {
  std::vector<Index> ids;
  std::vector<double> labels;
};
LabeledSet train_labeled(const VSGraph& g);

}  // namespace ktgnn
