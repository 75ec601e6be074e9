#pragma once

// Vocal/silent graph data model.
//
// Nodes belong to one of two populations. Vocal nodes carry the full feature
// vector [x_obs || x_unobs] and (usually) labels; silent nodes only carry
// x_obs, and their x_unobs rows are zero with unobs_valid = false until some
// completion step fills them. Adjacency is stored as symmetric CSR with rows
// sorted ascending.

#include "ktgnn/autodiff.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <ranges>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace ktgnn {

using ad::Index;
using ad::Mat;
using RowVec = Eigen::RowVectorXd;

enum class Population : std::uint8_t { Vocal = 0, Silent = 1 };
enum class Split : std::uint8_t { None = 0, Train = 1, Val = 2, Test = 3 };

inline constexpr int kNoLabel = -1;

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Unobservable feature rows for the vocal nodes, keyed by node id.
struct UnobsRows {
  std::vector<Index> ids;
  Mat values;  // ids.size() x d_unobs
};

/// Raw inputs to build_graph.
struct GraphInput {
  Index num_nodes = 0;
  std::vector<std::pair<Index, Index>> edges;
  std::vector<Population> population;
  Mat x_obs;
  UnobsRows x_unobs_vocal;
  Index d_unobs = 0;  // needed when there are no vocal nodes
  std::vector<int> labels;
  std::vector<Split> split;  // empty = all None
};

class VSGraph {
 public:
  VSGraph() = default;

  [[nodiscard]] Index num_nodes() const { return num_nodes_; }
  /// Number of undirected edges (a self-loop counts once).
  [[nodiscard]] Index num_undirected_edges() const { return num_undirected_edges_; }
  /// Number of stored directed entries (csr_targets.size()).
  [[nodiscard]] Index num_directed_edges() const { return static_cast<Index>(csr_targets_.size()); }
  [[nodiscard]] Index d_obs() const { return x_obs_.cols(); }
  [[nodiscard]] Index d_unobs() const { return x_unobs_.cols(); }

  [[nodiscard]] const std::vector<Index>& csr_offsets() const { return csr_offsets_; }
  [[nodiscard]] const std::vector<Index>& csr_targets() const { return csr_targets_; }
  [[nodiscard]] const std::vector<Population>& population() const { return population_; }
  [[nodiscard]] Population population(Index i) const { return population_[i]; }
  [[nodiscard]] bool is_vocal(Index i) const { return population_[i] == Population::Vocal; }
  [[nodiscard]] const Mat& x_obs() const { return x_obs_; }
  [[nodiscard]] const Mat& x_unobs() const { return x_unobs_; }
  [[nodiscard]] const std::vector<std::uint8_t>& unobs_valid() const { return unobs_valid_; }
  [[nodiscard]] const std::vector<int>& labels() const { return labels_; }
  [[nodiscard]] const std::vector<Split>& split() const { return split_; }

  [[nodiscard]] const std::vector<Index>& vocal_ids() const { return vocal_ids_; }
  [[nodiscard]] const std::vector<Index>& silent_ids() const { return silent_ids_; }
  [[nodiscard]] const std::vector<Index>& ids_of(Population p) const {
    return p == Population::Vocal ? vocal_ids_ : silent_ids_;
  }

  [[nodiscard]] std::span<const Index> neighbors(Index i) const {
    return {csr_targets_.data() + csr_offsets_[i],
            static_cast<std::size_t>(csr_offsets_[i + 1] - csr_offsets_[i])};
  }

  /// Neighbors of i in stored order, optionally restricted to one population.
  [[nodiscard]] auto neighbors(Index i, std::optional<Population> filter) const {
    return neighbors(i) | std::views::filter([this, filter](Index j) {
             return !filter || population_[j] == *filter;
           });
  }

  /// Copy with a new split vector; validates the split invariants.
  [[nodiscard]] VSGraph with_split(std::vector<Split> split) const;

  /// Undirected edge list (i <= j) in canonical order.
  [[nodiscard]] std::vector<std::pair<Index, Index>> undirected_edges() const;

  /// Rows of x_unobs for the vocal nodes, in vocal_ids order.
  [[nodiscard]] UnobsRows vocal_unobs_rows() const;

  /// Reassembles the inputs this graph was built from.
  [[nodiscard]] GraphInput to_input() const;

  friend VSGraph build_graph(GraphInput input);

 private:
  Index num_nodes_ = 0;
  Index num_undirected_edges_ = 0;
  std::vector<Index> csr_offsets_{0};
  std::vector<Index> csr_targets_;
  std::vector<Population> population_;
  Mat x_obs_;
  Mat x_unobs_;
  std::vector<std::uint8_t> unobs_valid_;
  std::vector<int> labels_;
  std::vector<Split> split_;
  std::vector<Index> vocal_ids_;
  std::vector<Index> silent_ids_;
};

/// Validates and assembles a graph. Duplicate and reversed edges collapse to
/// one undirected edge stored in both directions. Throws DataError.
VSGraph build_graph(GraphInput input);

struct PopulationMeans {
  RowVec mean_obs_vocal;
  RowVec mean_obs_silent;
  RowVec mean_full_vocal;
  std::optional<RowVec> mean_full_silent;

  /// Throws UsageError when silent unobservable features were never completed.
  [[nodiscard]] const RowVec& full_silent() const;
};

/// Per-population feature means over all nodes of each population. Without
/// `completed_unobs`, the silent full mean is left unset.
PopulationMeans population_means(const VSGraph& g, const Mat* completed_unobs = nullptr);

/// Removes floor(fraction * #cross) uniformly chosen vocal<->silent edges.
VSGraph drop_cross_domain_edges(const VSGraph& g, double fraction, std::uint64_t seed);

/// Number of undirected edges whose endpoints are in different populations.
Index count_cross_domain_edges(const VSGraph& g);

/// Subgraph induced by the silent nodes (ids renumbered in order).
VSGraph silent_subgraph(const VSGraph& g);

}  // namespace ktgnn
