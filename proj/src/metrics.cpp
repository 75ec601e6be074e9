#include "ktgnn/metrics.hpp"

#include "ktgnn/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace ktgnn {

F1Mode parse_f1_mode(std::string_view s) {
  if (s == "macro") return F1Mode::Macro;
  if (s == "binary") return F1Mode::Binary;
  if (s == "micro") return F1Mode::Micro;
  throw UsageError("unknown f1 mode '" + std::string(s) + "'");
}

std::string_view to_string(F1Mode m) {
  switch (m) {
    case F1Mode::Binary: return "binary";
    case F1Mode::Micro: return "micro";
    case F1Mode::Macro: break;
  }
  return "macro";
}

namespace {

void check_lengths(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw UsageError("labels and scores differ in length");
  for (int l : labels)
    if (l != 0 && l != 1) throw DataError("metric labels must be 0 or 1");
}

double f1_from(std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  const std::int64_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

Confusion confusion(std::span<const int> labels, std::span<const double> scores, double threshold) {
  check_lengths(labels, scores);
  Confusion c;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const bool pred = scores[k] >= threshold;
    if (labels[k] == 1) {
      pred ? ++c.tp : ++c.fn;
    } else {
      pred ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double compute_f1(std::span<const int> labels, std::span<const double> scores, F1Mode mode,
                  double threshold) {
  const Confusion c = confusion(labels, scores, threshold);
  switch (mode) {
    case F1Mode::Binary:
      return f1_from(c.tp, c.fp, c.fn);
    case F1Mode::Micro: {
      const std::int64_t n = c.tp + c.fp + c.tn + c.fn;
      return n == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(n);
    }
    case F1Mode::Macro:
      break;
  }
  // The negative class swaps the roles of tp/tn and fp/fn.
  return 0.5 * (f1_from(c.tp, c.fp, c.fn) + f1_from(c.tn, c.fn, c.fp));
}

double compute_auc(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels, scores);
  const std::size_t n = labels.size();
  std::int64_t n_pos = 0;
  for (int l : labels) n_pos += l;
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC is undefined with a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie block spanning positions [lo, hi) gets (lo + hi + 1) / 2.
  // Twice the rank sum stays integral.
  std::int64_t twice_rank_sum = 0;
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo + 1;
    while (hi < n && scores[order[hi]] == scores[order[lo]]) ++hi;
    const auto twice_rank = static_cast<std::int64_t>(lo + hi + 1);
    for (std::size_t k = lo; k < hi; ++k)
      if (labels[order[k]] == 1) twice_rank_sum += twice_rank;
    lo = hi;
  }
  const std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace ktgnn
