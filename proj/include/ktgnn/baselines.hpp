#pragma once

// Population-agnostic reference models: a two-layer MLP and a two-layer GCN,
// fed by a fixed (non-learned) completion of the silent nodes' features.

#include "ktgnn/autodiff.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/params.hpp"

#include <string_view>
#include <vector>

namespace ktgnn {

enum class CompletionStrategy { None, Zero, MeanOfNeighbors };

CompletionStrategy parse_completion(std::string_view s);
std::string_view to_string(CompletionStrategy s);

/// Input features under a heuristic completion: N x d_obs for None,
/// N x (d_obs + d_unobs) otherwise.
Mat apply_completion(const VSGraph& g, CompletionStrategy strategy);

/// Symmetric-normalized adjacency with self-loops, as an edge list grouped by
/// target: out[dst] += weight * in[src].
struct NormalizedAdjacency {
  std::vector<Index> src;
  std::vector<Index> dst;
  Mat weight;  // E x 1
  Index num_nodes = 0;
};

NormalizedAdjacency normalized_adjacency(const VSGraph& g);

/// A_hat * x.
Tensor propagate(const NormalizedAdjacency& adj, const Tensor& x);

struct DenseLayer {
  Tensor weight;
  Tensor bias;
  static DenseLayer init(Index d_in, Index d_out, Rng& rng);
};

struct GCNParams {
  std::vector<DenseLayer> layers;
  static GCNParams init(Index d_in, Index hidden, Index classes, int num_layers, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix = "gcn.") const;
};

/// H' = LeakyReLU(A_hat H W + b) on hidden layers, linear logits on the last.
Tensor gcn_forward(const NormalizedAdjacency& adj, const Tensor& x, const GCNParams& params);

struct MLPParams {
  DenseLayer hidden;
  DenseLayer output;
  static MLPParams init(Index d_in, Index hidden, Index classes, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix = "mlp.") const;
};

Tensor mlp_forward(const Tensor& x, const MLPParams& params);

}  // namespace ktgnn
