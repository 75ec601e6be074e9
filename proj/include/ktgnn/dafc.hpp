#pragma once

// Domain-adapted feature completion.
//
// Silent nodes are completed hop by hop from the vocal set. In the first
// iteration a silent node with vocal neighbors receives an attention-weighted
// sum of their unobservable features, each first shifted by a learned
// domain-difference vector through a Tanh gate. Later iterations propagate
// from already-completed silent nodes without calibration.

#include "ktgnn/autodiff.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/params.hpp"

#include <vector>

namespace ktgnn {

struct DAFCParams {
  Tensor w_s;    // d_obs x d_att, target-side projection
  Tensor w_v;    // d_obs x d_att, source-side projection
  Tensor a_vs;   // 2*d_att x 1, [source half; target half]
  Tensor w_o2u;  // d_obs x d_unobs
  Tensor w_g;    // 2*d_unobs x d_unobs

  static DAFCParams init(Index d_obs, Index d_unobs, Index d_att, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix = "dafc.") const;
  [[nodiscard]] Index d_att() const { return w_s.cols(); }
};

/// Topology-only part of completion: who is completed when, and from whom.
struct CompletionPlan {
  struct Iteration {
    std::vector<Index> src;  // source node per message, grouped by dst
    std::vector<Index> dst;  // target node per message, nondecreasing
    std::vector<Index> completed;  // nodes completed in this iteration
  };
  int max_iterations = 0;
  std::vector<int> completed_at_iter;  // 0 vocal, k >= 1, or -1
  std::vector<Iteration> iterations;   // iterations.size() <= max_iterations
};

/// Multi-source expansion from the vocal set, at most `max_iterations` hops.
CompletionPlan plan_completion(const VSGraph& g, int max_iterations);

struct CompletionResult {
  Tensor x_unobs_completed;  // N x d_unobs
  std::vector<int> completed_at_iter;
  std::vector<std::vector<Index>> frontier_sets;
};

/// (mean_obs_vocal - mean_obs_silent) * W_o2u, a 1 x d_unobs row.
Tensor unobservable_domain_difference(const PopulationMeans& means, const DAFCParams& params);

/// x - delta * tanh([x || delta] * W_g), applied to each row of `x_unobs`.
Tensor calibrate_vocal_features(const Tensor& x_unobs, const Tensor& delta, const DAFCParams& params);

/// LeakyReLU([x_src W_src || x_dst W_dst] * a_vs) for each row pair; E x 1.
Tensor importance_scores(const Tensor& x_src_obs, const Tensor& x_dst_obs, const Tensor& w_src,
                         const Tensor& w_dst, const Tensor& a_vs);

/// Runs completion for the current parameters. With `raw_scores` the
/// LeakyReLU scores are used as weights directly instead of being softmax
/// normalized per target.
CompletionResult complete_features(const VSGraph& g, const DAFCParams& params,
                                   const CompletionPlan& plan, const Tensor& delta,
                                   bool raw_scores = false);

/// |delta - (E_vocal[x_u] - E_completed_silent[x_hat_u])|^2.
Tensor distribution_consistency_loss(const VSGraph& g, const CompletionResult& result,
                                     const Tensor& delta);

}  // namespace ktgnn
