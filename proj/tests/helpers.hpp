#pragma once

#include "ktgnn/autodiff.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/params.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace ktgnn::testing {

struct RandomGraphSpec {
  Index nodes = 20;
  double edge_prob = 0.2;
  double vocal_fraction = 0.3;
  Index d_obs = 3;
  Index d_unobs = 2;
  double label_prob = 1.0;  // chance a node gets a label
  bool both_populations = true;
};

/// Erdos-Renyi graph with Gaussian features and random labels.
inline VSGraph random_graph(const RandomGraphSpec& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);

  GraphInput in;
  in.num_nodes = s.nodes;
  in.d_unobs = s.d_unobs;
  in.population.resize(s.nodes);
  for (Index i = 0; i < s.nodes; ++i)
    in.population[i] = u(rng) < s.vocal_fraction ? Population::Vocal : Population::Silent;
  if (s.both_populations && s.nodes >= 2) {
    in.population[0] = Population::Vocal;
    in.population[1] = Population::Silent;
  }
  for (Index i = 0; i < s.nodes; ++i)
    for (Index j = i + 1; j < s.nodes; ++j)
      if (u(rng) < s.edge_prob) in.edges.emplace_back(i, j);

  in.x_obs = Mat(s.nodes, s.d_obs);
  for (Index k = 0; k < in.x_obs.size(); ++k) in.x_obs.data()[k] = z(rng);
  for (Index i = 0; i < s.nodes; ++i)
    if (in.population[i] == Population::Vocal) in.x_unobs_vocal.ids.push_back(i);
  in.x_unobs_vocal.values = Mat(static_cast<Index>(in.x_unobs_vocal.ids.size()), s.d_unobs);
  for (Index k = 0; k < in.x_unobs_vocal.values.size(); ++k) in.x_unobs_vocal.values.data()[k] = z(rng);

  in.labels.resize(s.nodes);
  for (Index i = 0; i < s.nodes; ++i)
    in.labels[i] = u(rng) < s.label_prob ? static_cast<int>(rng() % 2) : kNoLabel;
  return build_graph(std::move(in));
}

/// Every labeled node goes to train.
inline VSGraph all_train(const VSGraph& g) {
  std::vector<Split> sp(g.num_nodes(), Split::None);
  for (Index i = 0; i < g.num_nodes(); ++i)
    if (g.labels()[i] != kNoLabel) sp[i] = Split::Train;
  return g.with_split(std::move(sp));
}

inline Mat random_matrix(Index r, Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Mat m(r, c);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = z(rng);
  return m;
}

struct GradCheck {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::size_t entries = 0;
};

inline constexpr double kFiniteDiffStep = 1e-5;

/// Central differences of `loss` against the analytic gradient of every
/// entry of every tensor in `leaves`. Relative error is
/// |analytic - numeric| / (|numeric| + 1e-8).
inline GradCheck grad_check(const std::vector<ad::Tensor>& leaves,
                            const std::function<ad::Tensor()>& loss,
                            double h = kFiniteDiffStep) {
  for (const auto& t : leaves) t.zero_grad();
  loss().backward();
  std::vector<Mat> analytic;
  for (const auto& t : leaves) analytic.push_back(t.grad());

  GradCheck r;
  ad::NoGradGuard guard;
  for (std::size_t p = 0; p < leaves.size(); ++p) {
    ad::Tensor t = leaves[p];
    Mat& v = t.mutable_value();
    for (Index k = 0; k < v.size(); ++k) {
      const double orig = v.data()[k];
      v.data()[k] = orig + h;
      const double up = loss().item();
      v.data()[k] = orig - h;
      const double down = loss().item();
      v.data()[k] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(analytic[p].data()[k] - numeric);
      r.max_abs_err = std::max(r.max_abs_err, err);
      r.max_rel_err = std::max(r.max_rel_err, err / (std::abs(numeric) + 1e-8));
      ++r.entries;
    }
  }
  return r;
}

inline std::vector<ad::Tensor> leaves_of(const ParamSet& set) {
  std::vector<ad::Tensor> out;
  for (const auto& p : set.items()) out.push_back(p.tensor);
  return out;
}

}  // namespace ktgnn::testing
