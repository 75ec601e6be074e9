#pragma once

#include "ktgnn/config.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/model.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace ktgnn {

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
};

/// Labeled silent nodes are shuffled under `seed` and cut into
/// floor(0.6 n) train, floor(0.2 n) val, and the rest test. Every labeled vocal
/// node goes to train. Requires at least 5 labeled silent nodes.
VSGraph split_dataset(const VSGraph& g, std::uint64_t seed, SplitRatios ratios = {});

/// Applies the config's graph transforms in a fixed order: silent-only
/// filter, cross-edge removal, then (unless the file split is kept) a fresh
/// split. Deterministic in (g, cfg).
VSGraph prepare_graph(const VSGraph& g, const TrainConfig& cfg);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ScoreMetrics {
  double f1 = kNaN;
  double auc = kNaN;
};

enum class Head { Generated = 0, Target = 1, Source = 2 };
inline constexpr std::array<const char*, 3> kHeadNames = {"generated", "target", "source"};
inline constexpr std::array<const char*, 3> kSplitNames = {"train", "val", "test"};

struct EpochRecord {
  int epoch = 0;
  LossTerms loss;
  // metrics[head][split] over silent nodes of that split
  std::array<std::array<ScoreMetrics, 3>, 3> metrics{};
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  EpochRecord best;
  std::vector<Mat> best_params;
  std::vector<double> best_scores;  // generated head, every node
  bool vocal_train_empty = false;
};

/// Silent nodes of one split with labels.
struct EvalSet {
  std::vector<Index> ids;
  std::vector<int> labels;
};
EvalSet silent_eval_set(const VSGraph& g, Split split);

/// F1/AUC of `scores` (indexed by node id) on an evaluation set; AUC is NaN
/// when the set holds a single class, both NaN when empty.
ScoreMetrics evaluate_scores(const std::vector<double>& scores, const EvalSet& set, F1Mode mode);

/// Full-batch training with Adam; selection on validation F1 of the generated
/// head (ties broken by validation AUC, then earliest epoch). Throws
/// NumericalError when a loss term becomes non-finite. The model's parameters
/// are left at the best epoch's values.
TrainResult train_model(Model& model, const TrainConfig& cfg);

/// Metrics of the model's current parameters, in the same layout as a history row.
EpochRecord evaluate_model(Model& model, const TrainConfig& cfg);

/// prepare_graph + make_model + train_model.
struct Experiment {
  VSGraph graph;
  std::unique_ptr<Model> model;
  TrainResult result;
};
Experiment run_experiment(const VSGraph& g, const TrainConfig& cfg);

void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& history);
nlohmann::json summary_json(const TrainConfig& cfg, const TrainResult& result);
nlohmann::json record_json(const EpochRecord& r);

/// Shortest round-trip decimal; "nan" for NaN.
std::string format_number(double v);

}  // namespace ktgnn
