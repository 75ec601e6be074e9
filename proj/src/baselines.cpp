#include "ktgnn/baselines.hpp"

#include "ktgnn/errors.hpp"

#include <cmath>
#include <string>

namespace ktgnn {

CompletionStrategy parse_completion(std::string_view s) {
  if (s == "none") return CompletionStrategy::None;
  if (s == "zero") return CompletionStrategy::Zero;
  if (s == "mean" || s == "mean_of_neighbors") return CompletionStrategy::MeanOfNeighbors;
  throw UsageError("unknown completion strategy '" + std::string(s) + "'");
}

std::string_view to_string(CompletionStrategy s) {
  switch (s) {
    case CompletionStrategy::None: return "none";
    case CompletionStrategy::Zero: return "zero";
    case CompletionStrategy::MeanOfNeighbors: break;
  }
  return "mean";
}

Mat apply_completion(const VSGraph& g, CompletionStrategy strategy) {
  if (strategy == CompletionStrategy::None) return g.x_obs();
  const Index n = g.num_nodes();
  const Index d_o = g.d_obs();
  Mat out(n, d_o + g.d_unobs());
  out.leftCols(d_o) = g.x_obs();
  out.rightCols(g.d_unobs()) = g.x_unobs();
  if (strategy == CompletionStrategy::MeanOfNeighbors) {
    for (Index i : g.silent_ids()) {
      RowVec acc = RowVec::Zero(g.d_unobs());
      Index count = 0;
      for (Index j : g.neighbors(i, Population::Vocal)) {
        acc += g.x_unobs().row(j);
        ++count;
      }
      if (count > 0) out.row(i).tail(g.d_unobs()) = acc / static_cast<double>(count);
    }
  }
  return out;
}

NormalizedAdjacency normalized_adjacency(const VSGraph& g) {
  NormalizedAdjacency a;
  const Index n = g.num_nodes();
  a.num_nodes = n;
  std::vector<double> degree(n, 0.0);
  std::vector<std::uint8_t> has_loop(n, 0);
  for (Index j = 0; j < n; ++j) {
    for (Index i : g.neighbors(j)) {
      degree[j] += 1.0;
      if (i == j) has_loop[j] = 1;
    }
    if (!has_loop[j]) degree[j] += 1.0;
  }
  for (Index j = 0; j < n; ++j) {
    bool self_done = false;
    auto emit = [&](Index i) {
      a.src.push_back(i);
      a.dst.push_back(j);
    };
    for (Index i : g.neighbors(j)) {
      if (!self_done && !has_loop[j] && i > j) {
        emit(j);
        self_done = true;
      }
      emit(i);
    }
    if (!self_done && !has_loop[j]) emit(j);
  }
  a.weight.resize(static_cast<Index>(a.src.size()), 1);
  for (std::size_t e = 0; e < a.src.size(); ++e)
    a.weight(static_cast<Index>(e), 0) = 1.0 / std::sqrt(degree[a.src[e]] * degree[a.dst[e]]);
  return a;
}

Tensor propagate(const NormalizedAdjacency& adj, const Tensor& x) {
  const Tensor messages = ad::mul_col(ad::gather_rows(x, adj.src), ad::constant(adj.weight));
  return ad::scatter_add_rows(messages, adj.dst, adj.num_nodes);
}

DenseLayer DenseLayer::init(Index d_in, Index d_out, Rng& rng) {
  return {ad::parameter(glorot_uniform(d_in, d_out, rng)), ad::parameter(Mat::Zero(1, d_out))};
}

GCNParams GCNParams::init(Index d_in, Index hidden, Index classes, int num_layers, Rng& rng) {
  if (num_layers < 1) throw UsageError("gcn needs at least one layer");
  GCNParams p;
  Index width = d_in;
  for (int l = 0; l < num_layers; ++l) {
    const Index next = (l + 1 == num_layers) ? classes : hidden;
    p.layers.push_back(DenseLayer::init(width, next, rng));
    width = next;
  }
  return p;
}

void GCNParams::register_into(ParamSet& set, const std::string& prefix) const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    set.add(prefix + std::to_string(l) + ".weight", layers[l].weight);
    set.add(prefix + std::to_string(l) + ".bias", layers[l].bias);
  }
}

Tensor gcn_forward(const NormalizedAdjacency& adj, const Tensor& x, const GCNParams& params) {
  Tensor h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    // Propagate the narrower side first.
    Tensor z = h.cols() <= layer.weight.cols()
                   ? ad::matmul(propagate(adj, h), layer.weight)
                   : propagate(adj, ad::matmul(h, layer.weight));
    z = ad::add_row(z, layer.bias);
    h = (l + 1 == params.layers.size()) ? z : ad::leaky_relu(z);
  }
  return h;
}

MLPParams MLPParams::init(Index d_in, Index hidden, Index classes, Rng& rng) {
  return {DenseLayer::init(d_in, hidden, rng), DenseLayer::init(hidden, classes, rng)};
}

void MLPParams::register_into(ParamSet& set, const std::string& prefix) const {
  set.add(prefix + "hidden.weight", hidden.weight);
  set.add(prefix + "hidden.bias", hidden.bias);
  set.add(prefix + "output.weight", output.weight);
  set.add(prefix + "output.bias", output.bias);
}

Tensor mlp_forward(const Tensor& x, const MLPParams& params) {
  const Tensor h = ad::leaky_relu(ad::add_row(ad::matmul(x, params.hidden.weight), params.hidden.bias));
  return ad::add_row(ad::matmul(h, params.output.weight), params.output.bias);
}

}  // namespace ktgnn
