#pragma once

#include "ktgnn/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ktgnn {

/// One grid point: the overridden keys and their values, in key order.
struct GridCell {
  std::vector<std::pair<std::string, nlohmann::json>> values;
  [[nodiscard]] std::string label() const;  // "K=2;lambda=0.5"
};

/// Cartesian product of a {"key": [v1, v2, ...], ...} object. Keys are
/// iterated in sorted order, the last key varying fastest. Throws UsageError
/// on an empty grid, a non-array entry, or an empty value list.
std::vector<GridCell> expand_grid(const nlohmann::json& grid);

struct RunOutcome {
  std::size_t cell = 0;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  double val_f1 = 0, val_auc = 0, test_f1 = 0, test_auc = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};
MeanStd mean_std(const std::vector<double>& v);

struct CellSummary {
  std::size_t cell = 0;
  std::size_t runs = 0;
  MeanStd test_f1, test_auc, val_f1, val_auc;
};

/// Groups outcomes by cell (in cell order).
std::vector<CellSummary> aggregate(const std::vector<RunOutcome>& runs, std::size_t num_cells);

}  // namespace ktgnn
