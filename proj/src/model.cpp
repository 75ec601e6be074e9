#include "ktgnn/model.hpp"

#include "ktgnn/errors.hpp"

namespace ktgnn {

namespace {

std::vector<double> positive_scores(const ad::Tensor& probs) {
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Index k = 0; k < probs.rows(); ++k) out[k] = probs.value()(k, 1);
  return out;
}

}  // namespace

LabeledSet train_labeled(const VSGraph& g) {
  LabeledSet s;
  for (Index i = 0; i < g.num_nodes(); ++i) {
    if (g.split()[i] == Split::Train && g.labels()[i] != kNoLabel) {
      s.ids.push_back(i);
      s.labels.push_back(static_cast<double>(g.labels()[i]));
    }
  }
  return s;
}

KTGNNModel::KTGNNModel(VSGraph graph, const TrainConfig& cfg, std::uint64_t init_seed)
    : graph_(std::move(graph)), cfg_(cfg) {
  cfg_.validate();
  if (graph_.vocal_ids().empty() || graph_.silent_ids().empty())
    throw DataError("ktgnn needs both vocal and silent nodes");
  means_ = population_means(graph_);
  completion_plan_ = plan_completion(graph_, cfg_.K);
  message_plan_ = plan_messages(graph_, !cfg_.ablate.no_damp);

  Rng rng(init_seed);
  const Index d_in = graph_.d_obs() + graph_.d_unobs();
  const Index hidden = cfg_.hidden_dim;
  dafc_ = DAFCParams::init(graph_.d_obs(), graph_.d_unobs(), cfg_.effective_att_dim(), rng);
  Index width = d_in;
  for (int l = 0; l < cfg_.num_layers; ++l) {
    layers_.push_back(DAMPLayerParams::init(width, hidden, rng));
    width = hidden;
  }
  dtc_ = DTCParams::init(hidden, kNumClasses, rng);
  single_head_ = LinearClassifier::init(hidden, kNumClasses, rng);

  if (!cfg_.ablate.no_dafc) dafc_.register_into(params_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (cfg_.ablate.no_damp) {
      // Shared parameters only; the silent-target set is unused.
      params_.add("damp." + std::to_string(l) + ".w", layers_[l].w_pop[0]);
      params_.add("damp." + std::to_string(l) + ".a", layers_[l].a_pop[0]);
    } else {
      layers_[l].register_into(params_, "damp." + std::to_string(l) + ".");
    }
  }
  if (cfg_.ablate.no_dtc) {
    single_head_.register_into(params_, "head.");
  } else {
    dtc_.register_into(params_);
  }
}

CompletionResult KTGNNModel::complete() const {
  if (cfg_.ablate.no_dafc) {
    CompletionResult r;
    r.x_unobs_completed = ad::constant(graph_.x_unobs());
    r.completed_at_iter.assign(graph_.num_nodes(), -1);
    for (Index v : graph_.vocal_ids()) r.completed_at_iter[v] = 0;
    return r;
  }
  const Tensor delta = unobservable_domain_difference(means_, dafc_);
  return complete_features(graph_, dafc_, completion_plan_, delta, cfg_.raw_scores);
}

ForwardResult KTGNNModel::forward(bool training, std::uint64_t step_seed) {
  ForwardResult r;
  Tensor dist = ad::constant_scalar(0.0);
  Tensor x_unobs;
  if (cfg_.ablate.no_dafc) {
    x_unobs = ad::constant(graph_.x_unobs());
  } else {
    const Tensor delta = unobservable_domain_difference(means_, dafc_);
    CompletionResult completion =
        complete_features(graph_, dafc_, completion_plan_, delta, cfg_.raw_scores);
    if (!completion.frontier_sets.empty())
      dist = distribution_consistency_loss(graph_, completion, delta);
    x_unobs = completion.x_unobs_completed;
  }

  Tensor h = ad::concat_cols(ad::constant(graph_.x_obs()), x_unobs);
  const DAMPOptions opts{cfg_.raw_scores};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (training && l > 0) h = ad::dropout(h, cfg_.dropout, derive_seed(step_seed, l));
    h = damp_layer_forward(graph_, message_plan_, h, layers_[l], opts);
  }

  if (cfg_.ablate.no_dtc) {
    const Tensor probs = single_head_.probabilities(h);
    const LabeledSet labeled = train_labeled(graph_);
    Tensor clf = ad::constant_scalar(0.0);
    if (!labeled.ids.empty())
      clf = binary_cross_entropy(positive_column(ad::gather_rows(probs, labeled.ids)), labeled.labels);
    r.loss = total_loss(clf, ad::constant_scalar(0.0), dist, 0.0, cfg_.effective_gamma());
    r.terms.clf = clf.item();
    r.terms.clf_generated = r.terms.clf;
    r.terms.dist = dist.item();
    r.scores.generated = positive_scores(probs);
  } else {
    const DTCOutputs out = dtc_forward(h, graph_, dtc_);
    const ClassificationLoss clf = classification_loss(out, graph_);
    const Tensor kl = kl_loss(out, cfg_.stop_kl_teacher_grad);
    r.loss = total_loss(clf.total, kl, dist, cfg_.effective_lambda(), cfg_.effective_gamma());
    r.terms.clf = clf.total.item();
    r.terms.kl = kl.item();
    r.terms.dist = dist.item();
    r.terms.clf_source = clf.source.item();
    r.terms.clf_target = clf.target.item();
    r.terms.clf_generated = clf.generated.item();
    r.scores.generated = positive_scores(out.prob_generated_all);
    r.scores.source = positive_scores(out.prob_source_all);
    r.scores.target = positive_scores(out.prob_target_all);
  }
  r.terms.total = r.loss.item();
  return r;
}

BaselineModel::BaselineModel(VSGraph graph, const TrainConfig& cfg, std::uint64_t init_seed)
    : graph_(std::move(graph)), cfg_(cfg) {
  cfg_.validate();
  features_ = apply_completion(graph_, cfg_.completion);
  Rng rng(init_seed);
  if (cfg_.model == ModelKind::GCN) {
    adjacency_ = normalized_adjacency(graph_);
    gcn_ = GCNParams::init(features_.cols(), cfg_.hidden_dim, kNumClasses, cfg_.num_layers, rng);
    gcn_->register_into(params_);
  } else if (cfg_.model == ModelKind::MLP) {
    mlp_ = MLPParams::init(features_.cols(), cfg_.hidden_dim, kNumClasses, rng);
    mlp_->register_into(params_);
  } else {
    throw UsageError("BaselineModel: model must be gcn or mlp");
  }
}

ForwardResult BaselineModel::forward(bool training, std::uint64_t step_seed) {
  Tensor x = ad::constant(features_);
  if (training) x = ad::dropout(x, cfg_.dropout, step_seed);
  const Tensor logits = gcn_ ? gcn_forward(adjacency_, x, *gcn_) : mlp_forward(x, *mlp_);
  const Tensor probs = ad::row_softmax(logits);
  const LabeledSet labeled = train_labeled(graph_);
  Tensor loss = ad::constant_scalar(0.0);
  if (!labeled.ids.empty())
    loss = binary_cross_entropy(positive_column(ad::gather_rows(probs, labeled.ids)), labeled.labels);

  ForwardResult r;
  r.loss = loss;
  r.terms.total = r.terms.clf = r.terms.clf_generated = loss.item();
  r.scores.generated = positive_scores(probs);
  return r;
}

std::unique_ptr<Model> make_model(const VSGraph& g, const TrainConfig& cfg, std::uint64_t init_seed) {
  if (cfg.model == ModelKind::KTGNN) return std::make_unique<KTGNNModel>(g, cfg, init_seed);
  return std::make_unique<BaselineModel>(g, cfg, init_seed);
}

}  // namespace ktgnn
