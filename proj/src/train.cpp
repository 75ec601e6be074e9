#include "ktgnn/train.hpp"

#include "ktgnn/errors.hpp"
#include "ktgnn/optim.hpp"

#include <charconv>
#include <iostream>
#include <ostream>
#include <random>

namespace ktgnn {

using nlohmann::json;

VSGraph split_dataset(const VSGraph& g, std::uint64_t seed, SplitRatios ratios) {
  std::vector<Index> silent;
  for (Index i : g.silent_ids())
    if (g.labels()[i] != kNoLabel) silent.push_back(i);
  if (silent.size() < 5)
    throw DataError("split needs at least 5 labeled silent nodes, found " + std::to_string(silent.size()));

  std::mt19937_64 rng(seed);
  for (std::size_t k = silent.size(); k > 1; --k) {
    const std::size_t pick = static_cast<std::size_t>(rng() % k);
    std::swap(silent[k - 1], silent[pick]);
  }
  const double n = static_cast<double>(silent.size());
  const auto n_train = static_cast<std::size_t>(std::floor(ratios.train * n));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.val * n));

  std::vector<Split> split(g.num_nodes(), Split::None);
  for (std::size_t k = 0; k < silent.size(); ++k)
    split[silent[k]] = k < n_train ? Split::Train : (k < n_train + n_val ? Split::Val : Split::Test);
  bool any_vocal = false;
  for (Index i : g.vocal_ids()) {
    if (g.labels()[i] != kNoLabel) {
      split[i] = Split::Train;
      any_vocal = true;
    }
  }
  if (!any_vocal && !g.vocal_ids().empty())
    std::cerr << "warning: no labeled vocal nodes; training uses silent labels only\n";
  return g.with_split(std::move(split));
}

VSGraph prepare_graph(const VSGraph& g, const TrainConfig& cfg) {
  VSGraph out = cfg.silent_only ? silent_subgraph(g) : g;
  if (cfg.cross_edge_drop > 0.0) out = drop_cross_domain_edges(out, cfg.cross_edge_drop, derive_seed(cfg.seed, 1));
  if (!cfg.use_file_split) out = split_dataset(out, derive_seed(cfg.seed, 0));
  return out;
}

EvalSet silent_eval_set(const VSGraph& g, Split split) {
  EvalSet s;
  for (Index i : g.silent_ids()) {
    if (g.split()[i] == split && g.labels()[i] != kNoLabel) {
      s.ids.push_back(i);
      s.labels.push_back(g.labels()[i]);
    }
  }
  return s;
}

ScoreMetrics evaluate_scores(const std::vector<double>& scores, const EvalSet& set, F1Mode mode) {
  ScoreMetrics m;
  if (set.ids.empty()) return m;
  std::vector<double> s;
  s.reserve(set.ids.size());
  for (Index i : set.ids) s.push_back(scores[i]);
  m.f1 = compute_f1(set.labels, s, mode);
  bool pos = false;
  bool neg = false;
  for (int l : set.labels) (l == 1 ? pos : neg) = true;
  if (pos && neg) m.auc = compute_auc(set.labels, s);
  return m;
}

namespace {

void check_finite(const LossTerms& t, int epoch) {
  auto bad = [](double v) { return !std::isfinite(v); };
  std::string which;
  if (bad(t.clf)) which = "classification loss";
  else if (bad(t.kl)) which = "KL loss";
  else if (bad(t.dist)) which = "distribution-consistency loss";
  else if (bad(t.total)) which = "total loss";
  if (!which.empty()) throw NumericalError(which + " became non-finite at epoch " + std::to_string(epoch));
}

EpochRecord make_record(int epoch, const ForwardResult& fr, const std::array<EvalSet, 3>& sets,
                        F1Mode mode) {
  EpochRecord r;
  r.epoch = epoch;
  r.loss = fr.terms;
  const std::array<const std::vector<double>*, 3> heads = {
      &fr.scores.generated, fr.scores.target ? &*fr.scores.target : nullptr,
      fr.scores.source ? &*fr.scores.source : nullptr};
  for (std::size_t h = 0; h < 3; ++h) {
    if (!heads[h]) continue;
    for (std::size_t s = 0; s < 3; ++s) r.metrics[h][s] = evaluate_scores(*heads[h], sets[s], mode);
  }
  return r;
}

std::array<EvalSet, 3> eval_sets(const VSGraph& g) {
  return {silent_eval_set(g, Split::Train), silent_eval_set(g, Split::Val), silent_eval_set(g, Split::Test)};
}

double or_neg_inf(double v) { return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v; }

}  // namespace

EpochRecord evaluate_model(Model& model, const TrainConfig& cfg) {
  ad::NoGradGuard guard;
  const ForwardResult fr = model.forward(false, 0);
  return make_record(-1, fr, eval_sets(model.graph()), cfg.f1_mode);
}

TrainResult train_model(Model& model, const TrainConfig& cfg) {
  cfg.validate();
  const auto sets = eval_sets(model.graph());
  const ParamSet& params = model.params();
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState state;

  TrainResult result;
  {
    bool vocal_labeled = false;
    for (Index i : model.graph().vocal_ids())
      vocal_labeled |= model.graph().split()[i] == Split::Train && model.graph().labels()[i] != kNoLabel;
    result.vocal_train_empty = !vocal_labeled;
  }
  double best_f1 = -std::numeric_limits<double>::infinity();
  double best_auc = -std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    params.zero_grad();
    ForwardResult fr = model.forward(true, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(epoch)));
    check_finite(fr.terms, epoch);

    EpochRecord rec;
    if (cfg.dropout > 0.0) {
      rec = evaluate_model(model, cfg);
      rec.epoch = epoch;
      rec.loss = fr.terms;
    } else {
      rec = make_record(epoch, fr, sets, cfg.f1_mode);
    }

    const auto& val = rec.metrics[static_cast<int>(Head::Generated)][1];
    const double f1 = or_neg_inf(val.f1);
    const double auc = or_neg_inf(val.auc);
    if (result.best_epoch < 0 || f1 > best_f1 || (f1 == best_f1 && auc > best_auc)) {
      best_f1 = f1;
      best_auc = auc;
      result.best_epoch = epoch;
      result.best = rec;
      result.best_params = params.snapshot();
      if (cfg.dropout > 0.0) {
        ad::NoGradGuard guard;
        result.best_scores = model.forward(false, 0).scores.generated;
      } else {
        result.best_scores = fr.scores.generated;
      }
    }
    result.history.push_back(rec);

    fr.loss.backward();
    adam_step(params, state, adam);
  }
  params.restore(result.best_params);
  params.zero_grad();
  return result;
}

Experiment run_experiment(const VSGraph& g, const TrainConfig& cfg) {
  cfg.validate();
  Experiment e;
  e.graph = prepare_graph(g, cfg);
  e.model = make_model(e.graph, cfg, derive_seed(cfg.seed, 2));
  e.result = train_model(*e.model, cfg);
  return e;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_metrics_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,loss_total,loss_clf,loss_kl,loss_dist,loss_clf_source,loss_clf_target,loss_clf_generated";
  for (const char* h : kHeadNames)
    for (const char* s : kSplitNames) os << ',' << h << '_' << s << "_f1," << h << '_' << s << "_auc";
  os << '\n';
  for (const auto& r : history) {
    const auto& l = r.loss;
    os << r.epoch;
    for (double v : {l.total, l.clf, l.kl, l.dist, l.clf_source, l.clf_target, l.clf_generated})
      os << ',' << format_number(v);
    for (const auto& head : r.metrics)
      for (const auto& m : head) os << ',' << format_number(m.f1) << ',' << format_number(m.auc);
    os << '\n';
  }
}

namespace {

json num(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

json record_json(const EpochRecord& r) {
  json metrics = json::object();
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t s = 0; s < 3; ++s)
      metrics[kHeadNames[h]][kSplitNames[s]] = {{"f1", num(r.metrics[h][s].f1)},
                                                {"auc", num(r.metrics[h][s].auc)}};
  return {{"epoch", r.epoch},
          {"loss",
           {{"total", r.loss.total},
            {"clf", r.loss.clf},
            {"kl", r.loss.kl},
            {"dist", r.loss.dist},
            {"clf_source", r.loss.clf_source},
            {"clf_target", r.loss.clf_target},
            {"clf_generated", r.loss.clf_generated}}},
          {"metrics", metrics}};
}

json summary_json(const TrainConfig& cfg, const TrainResult& result) {
  const auto& test = result.best.metrics[static_cast<int>(Head::Generated)][2];
  const auto& val = result.best.metrics[static_cast<int>(Head::Generated)][1];
  return {{"best_epoch", result.best_epoch},
          {"epochs_run", static_cast<int>(result.history.size())},
          {"test", {{"f1", num(test.f1)}, {"auc", num(test.auc)}}},
          {"val", {{"f1", num(val.f1)}, {"auc", num(val.auc)}}},
          {"best", record_json(result.best)},
          {"config", to_json(cfg)}};
}

}  // namespace ktgnn
