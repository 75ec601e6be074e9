#include "ktgnn/sweep.hpp"

#include "ktgnn/errors.hpp"

#include <cmath>

namespace ktgnn {

using nlohmann::json;

std::string GridCell::label() const {
  std::string out;
  for (const auto& [k, v] : values) {
    if (!out.empty()) out += ';';
    out += k + '=' + (v.is_string() ? v.get<std::string>() : v.dump());
  }
  return out;
}

std::vector<GridCell> expand_grid(const json& grid) {
  if (!grid.is_object() || grid.empty()) throw UsageError("grid must be a non-empty JSON object");
  std::vector<std::pair<std::string, std::vector<json>>> axes;
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty())
      throw UsageError("grid entry '" + key + "' must be a non-empty array");
    TrainConfig probe;
    for (const auto& v : values) {
      apply_override(probe, key, v);
      probe.validate();
    }
    axes.emplace_back(key, std::vector<json>(values.begin(), values.end()));
  }

  std::vector<GridCell> cells(1);
  for (const auto& [key, values] : axes) {
    std::vector<GridCell> next;
    next.reserve(cells.size() * values.size());
    for (const auto& c : cells) {
      for (const auto& v : values) {
        GridCell g = c;
        g.values.emplace_back(key, v);
        next.push_back(std::move(g));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  if (v.empty()) return {std::nan(""), std::nan("")};
  double sum = 0.0;
  for (double x : v) sum += x;
  r.mean = sum / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

std::vector<CellSummary> aggregate(const std::vector<RunOutcome>& runs, std::size_t num_cells) {
  std::vector<CellSummary> out(num_cells);
  for (std::size_t c = 0; c < num_cells; ++c) {
    std::vector<double> tf, ta, vf, va;
    for (const auto& r : runs) {
      if (r.cell != c) continue;
      tf.push_back(r.test_f1);
      ta.push_back(r.test_auc);
      vf.push_back(r.val_f1);
      va.push_back(r.val_auc);
    }
    out[c] = {c, tf.size(), mean_std(tf), mean_std(ta), mean_std(vf), mean_std(va)};
  }
  return out;
}

}  // namespace ktgnn
