#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace ktgnn {

enum class F1Mode { Macro, Binary, Micro };

F1Mode parse_f1_mode(std::string_view s);
std::string_view to_string(F1Mode m);

inline constexpr double kDecisionThreshold = 0.5;

struct Confusion {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Predictions are positive when score >= threshold.
Confusion confusion(std::span<const int> labels, std::span<const double> scores,
                    double threshold = kDecisionThreshold);

/// Macro averages the per-class F1 of both classes; Binary is the positive
/// class only; Micro equals accuracy for single-label binary data. A class
/// with 2TP + FP + FN = 0 scores 0.
double compute_f1(std::span<const int> labels, std::span<const double> scores,
                  F1Mode mode = F1Mode::Macro, double threshold = kDecisionThreshold);

/// Area under the ROC curve via the Mann-Whitney U statistic with midranks, so
/// tied scores count one half. Throws DataError unless both classes appear.
double compute_auc(std::span<const int> labels, std::span<const double> scores);

}  // namespace ktgnn
