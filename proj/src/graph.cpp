#include "ktgnn/graph.hpp"

#include "ktgnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace ktgnn {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::None: break;
  }
  return "none";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  if (s == "none") return Split::None;
  throw DataError("unknown split tag '" + std::string(s) + "'");
}

namespace {

void check_split_invariants(const std::vector<Population>& pop, const std::vector<int>& labels,
                            const std::vector<Split>& split) {
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == Split::None) continue;
    if (labels[i] == kNoLabel)
      throw DataError("node " + std::to_string(i) + " is in split '" +
                      std::string(to_string(split[i])) + "' but has no label");
    if ((split[i] == Split::Val || split[i] == Split::Test) && pop[i] == Population::Vocal)
      throw DataError("node " + std::to_string(i) + " is vocal but assigned to " +
                      std::string(to_string(split[i])));
  }
}

}  // namespace

const RowVec& PopulationMeans::full_silent() const {
  if (!mean_full_silent)
    throw UsageError("silent full-feature mean requested before completion");
  return *mean_full_silent;
}

VSGraph build_graph(GraphInput in) {
  const Index n = in.num_nodes;
  if (n < 0) throw DataError("negative node count");
  auto need = [n](std::size_t got, const char* what) {
    if (static_cast<Index>(got) != n)
      throw DataError(std::string(what) + " has length " + std::to_string(got) +
                      ", expected " + std::to_string(n));
  };
  need(in.population.size(), "population");
  need(in.labels.size(), "labels");
  if (in.split.empty()) in.split.assign(n, Split::None);
  need(in.split.size(), "split");
  if (in.x_obs.rows() != n) throw DataError("x_obs row count does not match node count");
  for (int l : in.labels)
    if (l != 0 && l != 1 && l != kNoLabel) throw DataError("labels must be 0, 1 or -1");

  const Index d_unobs = in.x_unobs_vocal.ids.empty() ? in.d_unobs : in.x_unobs_vocal.values.cols();
  if (static_cast<Index>(in.x_unobs_vocal.ids.size()) != in.x_unobs_vocal.values.rows())
    throw DataError("x_unobs_vocal ids and rows disagree");

  VSGraph g;
  g.num_nodes_ = n;
  g.population_ = std::move(in.population);
  g.labels_ = std::move(in.labels);
  g.split_ = std::move(in.split);
  g.x_obs_ = std::move(in.x_obs);
  g.x_unobs_ = Mat::Zero(n, d_unobs);
  g.unobs_valid_.assign(n, 0);

  for (std::size_t k = 0; k < in.x_unobs_vocal.ids.size(); ++k) {
    const Index id = in.x_unobs_vocal.ids[k];
    if (id < 0 || id >= n) throw DataError("x_unobs_vocal: node id out of range");
    if (g.population_[id] != Population::Vocal)
      throw DataError("x_unobs_vocal: node " + std::to_string(id) + " is not vocal");
    if (g.unobs_valid_[id]) throw DataError("x_unobs_vocal: duplicate node " + std::to_string(id));
    g.x_unobs_.row(id) = in.x_unobs_vocal.values.row(k);
    g.unobs_valid_[id] = 1;
  }
  for (Index i = 0; i < n; ++i) {
    if (g.population_[i] == Population::Vocal) {
      g.vocal_ids_.push_back(i);
      if (!g.unobs_valid_[i])
        throw DataError("vocal node " + std::to_string(i) + " has no unobservable features");
    } else {
      g.silent_ids_.push_back(i);
    }
  }
  check_split_invariants(g.population_, g.labels_, g.split_);

  std::vector<std::vector<Index>> adj(n);
  for (auto [a, b] : in.edges) {
    if (a < 0 || a >= n || b < 0 || b >= n)
      throw DataError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                      ") references a node out of range");
    adj[a].push_back(b);
    if (a != b) adj[b].push_back(a);
  }
  g.csr_offsets_.assign(1, 0);
  Index self_loops = 0;
  for (Index i = 0; i < n; ++i) {
    auto& row = adj[i];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    if (std::binary_search(row.begin(), row.end(), i)) ++self_loops;
    g.csr_targets_.insert(g.csr_targets_.end(), row.begin(), row.end());
    g.csr_offsets_.push_back(static_cast<Index>(g.csr_targets_.size()));
  }
  g.num_undirected_edges_ = (g.num_directed_edges() - self_loops) / 2 + self_loops;
  return g;
}

VSGraph VSGraph::with_split(std::vector<Split> split) const {
  if (static_cast<Index>(split.size()) != num_nodes_) throw DataError("split length mismatch");
  check_split_invariants(population_, labels_, split);
  VSGraph g = *this;
  g.split_ = std::move(split);
  return g;
}

std::vector<std::pair<Index, Index>> VSGraph::undirected_edges() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(num_undirected_edges_);
  for (Index i = 0; i < num_nodes_; ++i)
    for (Index j : neighbors(i))
      if (i <= j) out.emplace_back(i, j);
  return out;
}

UnobsRows VSGraph::vocal_unobs_rows() const {
  UnobsRows r;
  r.ids = vocal_ids_;
  r.values.resize(static_cast<Index>(vocal_ids_.size()), d_unobs());
  for (std::size_t k = 0; k < vocal_ids_.size(); ++k) r.values.row(k) = x_unobs_.row(vocal_ids_[k]);
  return r;
}

GraphInput VSGraph::to_input() const {
  GraphInput in;
  in.num_nodes = num_nodes_;
  in.edges = undirected_edges();
  in.population = population_;
  in.x_obs = x_obs_;
  in.x_unobs_vocal = vocal_unobs_rows();
  in.d_unobs = d_unobs();
  in.labels = labels_;
  in.split = split_;
  return in;
}

PopulationMeans population_means(const VSGraph& g, const Mat* completed_unobs) {
  if (g.vocal_ids().empty()) throw DataError("population means: no vocal nodes");
  if (g.silent_ids().empty()) throw DataError("population means: no silent nodes");
  if (completed_unobs && (completed_unobs->rows() != g.num_nodes() ||
                          completed_unobs->cols() != g.d_unobs()))
    throw UsageError("population means: completed_unobs has the wrong shape");

  auto mean_over = [](const std::vector<Index>& ids, auto&& row_of, Index width) {
    RowVec acc = RowVec::Zero(width);
    for (Index i : ids)
      for (Index c = 0; c < width; ++c) acc[c] += row_of(i, c);
    return RowVec(acc / static_cast<double>(ids.size()));
  };
  const Index d_o = g.d_obs();
  const Index d_u = g.d_unobs();
  auto obs = [&](Index i, Index c) { return g.x_obs()(i, c); };
  auto full_raw = [&](Index i, Index c) { return c < d_o ? g.x_obs()(i, c) : g.x_unobs()(i, c - d_o); };

  PopulationMeans m;
  m.mean_obs_vocal = mean_over(g.vocal_ids(), obs, d_o);
  m.mean_obs_silent = mean_over(g.silent_ids(), obs, d_o);
  m.mean_full_vocal = mean_over(g.vocal_ids(), full_raw, d_o + d_u);
  if (completed_unobs) {
    auto full_done = [&](Index i, Index c) {
      return c < d_o ? g.x_obs()(i, c) : (*completed_unobs)(i, c - d_o);
    };
    m.mean_full_silent = mean_over(g.silent_ids(), full_done, d_o + d_u);
  }
  return m;
}

Index count_cross_domain_edges(const VSGraph& g) {
  Index count = 0;
  for (auto [i, j] : g.undirected_edges())
    if (g.population(i) != g.population(j)) ++count;
  return count;
}

VSGraph drop_cross_domain_edges(const VSGraph& g, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw UsageError("drop_cross_domain_edges: fraction must lie in [0, 1]");
  GraphInput in = g.to_input();
  std::vector<std::size_t> cross;
  for (std::size_t k = 0; k < in.edges.size(); ++k)
    if (g.population(in.edges[k].first) != g.population(in.edges[k].second)) cross.push_back(k);

  const auto n_drop = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(cross.size())));
  // Partial Fisher-Yates with an explicit index draw keeps the choice
  // independent of the standard library's shuffle implementation.
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < n_drop; ++k) {
    const std::size_t span = cross.size() - k;
    const std::size_t pick = k + static_cast<std::size_t>(rng() % span);
    std::swap(cross[k], cross[pick]);
  }
  std::vector<std::uint8_t> drop(in.edges.size(), 0);
  for (std::size_t k = 0; k < n_drop; ++k) drop[cross[k]] = 1;

  std::vector<std::pair<Index, Index>> kept;
  kept.reserve(in.edges.size() - n_drop);
  for (std::size_t k = 0; k < in.edges.size(); ++k)
    if (!drop[k]) kept.push_back(in.edges[k]);
  in.edges = std::move(kept);
  return build_graph(std::move(in));
}

VSGraph silent_subgraph(const VSGraph& g) {
  std::vector<Index> remap(g.num_nodes(), -1);
  const auto& silent = g.silent_ids();
  for (std::size_t k = 0; k < silent.size(); ++k) remap[silent[k]] = static_cast<Index>(k);

  GraphInput in;
  in.num_nodes = static_cast<Index>(silent.size());
  in.d_unobs = g.d_unobs();
  in.population.assign(silent.size(), Population::Silent);
  in.x_obs.resize(in.num_nodes, g.d_obs());
  in.x_unobs_vocal.values.resize(0, g.d_unobs());
  for (std::size_t k = 0; k < silent.size(); ++k) {
    in.x_obs.row(k) = g.x_obs().row(silent[k]);
    in.labels.push_back(g.labels()[silent[k]]);
    in.split.push_back(g.split()[silent[k]]);
  }
  for (auto [i, j] : g.undirected_edges())
    if (remap[i] >= 0 && remap[j] >= 0) in.edges.emplace_back(remap[i], remap[j]);
  return build_graph(std::move(in));
}

}  // namespace ktgnn
