#include "ktgnn/synth.hpp"

#include "ktgnn/config.hpp"
#include "ktgnn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ktgnn {

using nlohmann::json;

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError(std::string(name) + " must be in [0,1]");
  };
  prob(intra_edge_prob, "intra_edge_prob");
  prob(cross_edge_prob, "cross_edge_prob");
  prob(label_homophily, "label_homophily");
  prob(shift_label_alignment, "shift_label_alignment");
  if (!(label_rate_silent > 0.0 && label_rate_silent <= 1.0))
    throw UsageError("label_rate_silent must be in (0,1]");
  if (n_vocal < 0 || n_silent < 0 || n_vocal + n_silent == 0) throw UsageError("need at least one node");
  if (d_obs < 1 || d_unobs < 1) throw UsageError("d_obs and d_unobs must be positive");
  if (communities < 0 || community_boost < 0.0 || community_scale < 0.0)
    throw UsageError("community settings must be non-negative");
  if (unobs_noise < 0.0) throw UsageError("unobs_noise must be non-negative");
  if (unobs_map && (unobs_map->rows() != d_obs || unobs_map->cols() != d_unobs))
    throw UsageError("unobs_map must be d_obs x d_unobs");
  if (label_weights && (label_weights->rows() != d_obs + d_unobs || label_weights->cols() != 1))
    throw UsageError("label_weights must have d_obs + d_unobs entries");
}

namespace {

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Mat matrix_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw UsageError(std::string(name) + ": expected a matrix");
  Mat m(static_cast<Index>(j.size()), static_cast<Index>(j[0].size()));
  for (Index r = 0; r < m.rows(); ++r) {
    if (j[r].size() != static_cast<std::size_t>(m.cols())) throw UsageError(std::string(name) + ": ragged rows");
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Mat vector_from_json(const json& j, const char* name) {
  if (!j.is_array()) throw UsageError(std::string(name) + ": expected an array");
  Mat m(static_cast<Index>(j.size()), 1);
  for (Index r = 0; r < m.rows(); ++r) m(r, 0) = j[r].get<double>();
  return m;
}

Mat gaussian(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat m(rows, cols);
  for (Index k = 0; k < m.size(); ++k) m.data()[k] = scale * n01(rng);
  return m;
}

}  // namespace

json to_json(const SynthConfig& c) {
  json j = {{"n_vocal", c.n_vocal},
            {"n_silent", c.n_silent},
            {"d_obs", c.d_obs},
            {"d_unobs", c.d_unobs},
            {"intra_edge_prob", c.intra_edge_prob},
            {"cross_edge_prob", c.cross_edge_prob},
            {"label_homophily", c.label_homophily},
            {"communities", c.communities},
            {"community_boost", c.community_boost},
            {"community_scale", c.community_scale},
            {"shift_obs", c.shift_obs},
            {"shift_unobs", c.shift_unobs},
            {"shift_label_alignment", c.shift_label_alignment},
            {"unobs_noise", c.unobs_noise},
            {"unobs_map_scale", c.unobs_map_scale},
            {"label_obs_scale", c.label_obs_scale},
            {"label_unobs_scale", c.label_unobs_scale},
            {"label_rate_silent", c.label_rate_silent},
            {"seed", c.seed}};
  if (c.unobs_map) j["unobs_map"] = matrix_json(*c.unobs_map);
  if (c.label_weights) {
    json w = json::array();
    for (Index r = 0; r < c.label_weights->rows(); ++r) w.push_back((*c.label_weights)(r, 0));
    j["label_weights"] = w;
  }
  return j;
}

SynthConfig synth_config_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("synthetic config must be a JSON object");
  SynthConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_vocal") c.n_vocal = v.get<Index>();
      else if (key == "n_silent") c.n_silent = v.get<Index>();
      else if (key == "d_obs") c.d_obs = v.get<Index>();
      else if (key == "d_unobs") c.d_unobs = v.get<Index>();
      else if (key == "intra_edge_prob") c.intra_edge_prob = v.get<double>();
      else if (key == "cross_edge_prob") c.cross_edge_prob = v.get<double>();
      else if (key == "label_homophily") c.label_homophily = v.get<double>();
      else if (key == "communities") c.communities = v.get<Index>();
      else if (key == "community_boost") c.community_boost = v.get<double>();
      else if (key == "community_scale") c.community_scale = v.get<double>();
      else if (key == "shift_obs") c.shift_obs = v.get<double>();
      else if (key == "shift_unobs") c.shift_unobs = v.get<double>();
      else if (key == "shift_label_alignment") c.shift_label_alignment = v.get<double>();
      else if (key == "unobs_noise") c.unobs_noise = v.get<double>();
      else if (key == "unobs_map_scale") c.unobs_map_scale = v.get<double>();
      else if (key == "unobs_map") c.unobs_map = matrix_from_json(v, "unobs_map");
      else if (key == "label_obs_scale") c.label_obs_scale = v.get<double>();
      else if (key == "label_unobs_scale") c.label_unobs_scale = v.get<double>();
      else if (key == "label_weights") c.label_weights = vector_from_json(v, "label_weights");
      else if (key == "label_rate_silent") c.label_rate_silent = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else throw UsageError("unknown synthetic config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("synthetic config: ") + e.what());
  }
  c.validate();
  return c;
}

SynthData generate_synthetic_full(const SynthConfig& cfg) {
  cfg.validate();
  const Index nv = cfg.n_vocal;
  const Index n = cfg.n_vocal + cfg.n_silent;
  const Index d_o = cfg.d_obs;
  const Index d_u = cfg.d_unobs;

  std::mt19937_64 rng_model(derive_seed(cfg.seed, 0));
  std::mt19937_64 rng_feat(derive_seed(cfg.seed, 1));
  std::mt19937_64 rng_label(derive_seed(cfg.seed, 2));
  std::mt19937_64 rng_edge(derive_seed(cfg.seed, 3));
  std::mt19937_64 rng_comm(derive_seed(cfg.seed, 4));

  SynthData out;
  out.unobs_map = cfg.unobs_map ? *cfg.unobs_map : gaussian(d_o, d_u, cfg.unobs_map_scale / std::sqrt(double(d_o)), rng_model);
  if (cfg.label_weights) {
    out.label_weights = *cfg.label_weights;
  } else {
    out.label_weights.resize(d_o + d_u, 1);
    out.label_weights.topRows(d_o) = gaussian(d_o, 1, cfg.label_obs_scale / std::sqrt(double(d_o)), rng_model);
    out.label_weights.bottomRows(d_u) = gaussian(d_u, 1, cfg.label_unobs_scale / std::sqrt(double(d_u)), rng_model);
  }

  const RowVec shift_o = RowVec::Constant(d_o, cfg.shift_obs / std::sqrt(double(d_o)));
  RowVec shift_u = (1.0 - cfg.shift_label_alignment) * RowVec::Constant(d_u, 1.0 / std::sqrt(double(d_u)));
  if (cfg.shift_label_alignment > 0.0) {
    const RowVec w = out.label_weights.bottomRows(d_u).transpose();
    if (w.norm() > 0.0) shift_u += cfg.shift_label_alignment * w / w.norm();
  }
  if (shift_u.norm() > 0.0) shift_u *= cfg.shift_unobs / shift_u.norm();

  Mat x_obs = gaussian(n, d_o, 1.0, rng_feat);
  x_obs.topRows(nv).rowwise() += shift_o;
  Mat x_u = x_obs * out.unobs_map + gaussian(n, d_u, cfg.unobs_noise, rng_feat);
  x_u.topRows(nv).rowwise() += shift_u;

  std::vector<Index> community(n, 0);
  if (cfg.communities > 0) {
    const Mat centers = gaussian(cfg.communities, d_u, cfg.community_scale / std::sqrt(double(d_u)), rng_comm);
    std::uniform_int_distribution<Index> pick(0, cfg.communities - 1);
    for (Index i = 0; i < n; ++i) {
      community[i] = pick(rng_comm);
      x_u.row(i) += centers.row(community[i]);
    }
  }

  Mat full(n, d_o + d_u);
  full << x_obs, x_u;
  const Eigen::VectorXd logits = full * out.label_weights;
  {
    std::vector<double> sorted(logits.data(), logits.data() + n);
    std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
    out.label_bias = -sorted[n / 2];
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  out.labels_true.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-(logits[i] + out.label_bias)));
    out.labels_true[i] = u01(rng_label) < p ? 1 : 0;
  }
  std::vector<int> labels(n, kNoLabel);
  for (Index i = 0; i < n; ++i)
    if (i < nv || u01(rng_label) < cfg.label_rate_silent) labels[i] = out.labels_true[i];

  GraphInput in;
  in.num_nodes = n;
  in.d_unobs = d_u;
  for (Index i = 0; i < n; ++i) in.population.push_back(i < nv ? Population::Vocal : Population::Silent);
  const double same = 2.0 * cfg.label_homophily;
  const double diff = 2.0 * (1.0 - cfg.label_homophily);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double p = (i < nv) == (j < nv) ? cfg.intra_edge_prob : cfg.cross_edge_prob;
      p *= out.labels_true[i] == out.labels_true[j] ? same : diff;
      if (cfg.communities > 0 && community[i] == community[j]) p *= cfg.community_boost;
      if (p > 0.0 && u01(rng_edge) < std::min(p, 1.0)) in.edges.emplace_back(i, j);
    }
  }
  in.x_obs = x_obs;
  in.x_unobs_vocal.values = x_u.topRows(nv);
  for (Index i = 0; i < nv; ++i) in.x_unobs_vocal.ids.push_back(i);
  in.labels = std::move(labels);

  out.x_unobs_true = std::move(x_u);
  out.graph = build_graph(std::move(in));
  return out;
}

VSGraph generate_synthetic(const SynthConfig& cfg) { return generate_synthetic_full(cfg).graph; }

}  // namespace ktgnn
