#pragma once

#include "ktgnn/params.hpp"

#include <vector>

namespace ktgnn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

struct AdamState {
  std::vector<ad::Mat> m;
  std::vector<ad::Mat> v;
  long step = 0;
};

/// One bias-corrected Adam update of every parameter in `params` from its
/// current gradient. State is allocated (zeros) on first use.
void adam_step(const ParamSet& params, AdamState& state, const AdamConfig& cfg);

}  // namespace ktgnn
