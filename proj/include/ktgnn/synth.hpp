#pragma once

// Synthetic VS-Graph generator with a controllable population shift.

#include "ktgnn/graph.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>

namespace ktgnn {

struct SynthConfig {
  Index n_vocal = 300;
  Index n_silent = 1200;
  Index d_obs = 8;
  Index d_unobs = 16;
  double intra_edge_prob = 0.0013;
  double cross_edge_prob = 0.0004;
  // Same-label pairs get their edge probability scaled by 2h, others by 2(1-h).
  double label_homophily = 0.5;
  // Latent communities: each node joins one uniformly, same-community pairs
  // get their edge probability multiplied by community_boost, and the
  // community's mean (scale community_scale) is added to x_unobs.
  Index communities = 10;
  double community_boost = 60.0;
  double community_scale = 6.0;
  double shift_obs = 1.0;    // norm of the vocal x_obs offset
  double shift_unobs = 3.0;  // norm of the vocal x_unobs offset
  // Direction of the x_unobs offset: 0 spreads it evenly over all features,
  // 1 points it along the label weights of x_unobs.
  double shift_label_alignment = 1.0;
  double unobs_noise = 0.5;
  double unobs_map_scale = 0.5;
  std::optional<Mat> unobs_map;  // d_obs x d_unobs; drawn from the seed when unset
  double label_obs_scale = 0.5;
  double label_unobs_scale = 3.0;
  std::optional<Mat> label_weights;  // (d_obs + d_unobs) x 1; drawn when unset
  double label_rate_silent = 0.15;
  std::uint64_t seed = 0;

  /// Throws UsageError.
  void validate() const;
};

nlohmann::json to_json(const SynthConfig& cfg);
/// Unknown keys are an error.
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct SynthData {
  VSGraph graph;
  Mat x_unobs_true;  // every node, before masking
  std::vector<int> labels_true;
  Mat unobs_map;
  Mat label_weights;
  double label_bias = 0.0;
};

SynthData generate_synthetic_full(const SynthConfig& cfg);
VSGraph generate_synthetic(const SynthConfig& cfg);

}  // namespace ktgnn
