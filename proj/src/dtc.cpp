#include "ktgnn/dtc.hpp"

#include "ktgnn/errors.hpp"

namespace ktgnn {

LinearClassifier LinearClassifier::init(Index d, Index classes, Rng& rng) {
  return {ad::parameter(glorot_uniform(d, classes, rng)), ad::parameter(ad::Mat::Zero(1, classes))};
}

void LinearClassifier::register_into(ParamSet& set, const std::string& prefix) const {
  set.add(prefix + "weight", weight);
  set.add(prefix + "bias", bias);
}

Tensor LinearClassifier::probabilities(const Tensor& h) const {
  return ad::row_softmax(ad::add_row(ad::matmul(h, weight), bias));
}

TransferNet TransferNet::init(Index flat, Rng& rng) {
  TransferNet t;
  t.m1 = ad::parameter(glorot_uniform(flat, flat, rng));
  t.c1 = ad::parameter(ad::Mat::Zero(1, flat));
  t.m2 = ad::parameter(uniform(flat, flat, kTransferInitScale, rng));
  t.c2 = ad::parameter(ad::Mat::Zero(1, flat));
  return t;
}

void TransferNet::register_into(ParamSet& set, const std::string& prefix) const {
  set.add(prefix + "m1", m1);
  set.add(prefix + "c1", c1);
  set.add(prefix + "m2", m2);
  set.add(prefix + "c2", c2);
}

void TransferNet::set_identity() {
  m2.mutable_value().setZero();
  c2.mutable_value().setZero();
}

LinearClassifier TransferNet::apply(const LinearClassifier& source) const {
  const Index d = source.weight.rows();
  const Index c = source.weight.cols();
  const Tensor flat =
      ad::concat_cols(ad::reshape(source.weight, 1, d * c), ad::reshape(source.bias, 1, c));
  const Tensor hidden = ad::tanh(ad::add(ad::matmul(flat, m1), c1));
  const Tensor out = ad::add(flat, ad::add(ad::matmul(hidden, m2), c2));
  return {ad::reshape(ad::slice_cols(out, 0, d * c), d, c), ad::slice_cols(out, d * c, c)};
}

DTCParams DTCParams::init(Index d, Index classes, Rng& rng) {
  DTCParams p;
  p.source = LinearClassifier::init(d, classes, rng);
  p.target = LinearClassifier::init(d, classes, rng);
  p.transfer = TransferNet::init(d * classes + classes, rng);
  return p;
}

void DTCParams::register_into(ParamSet& set, const std::string& prefix) const {
  source.register_into(set, prefix + "source.");
  target.register_into(set, prefix + "target.");
  transfer.register_into(set, prefix + "transfer.");
}

DTCOutputs dtc_forward(const Tensor& h, const VSGraph& g, const DTCParams& params) {
  if (h.rows() != g.num_nodes()) throw UsageError("dtc: representation rows must equal node count");
  DTCOutputs out;
  const LinearClassifier generated = params.transfer.apply(params.source);
  out.prob_source_all = params.source.probabilities(h);
  out.prob_target_all = params.target.probabilities(h);
  out.prob_generated_all = generated.probabilities(h);
  out.p_s = ad::gather_rows(out.prob_source_all, g.vocal_ids());
  out.p_t = ad::gather_rows(out.prob_target_all, g.silent_ids());
  out.p_hat_s = ad::gather_rows(out.prob_generated_all, g.vocal_ids());
  out.p_hat_t = ad::gather_rows(out.prob_generated_all, g.silent_ids());
  return out;
}

Tensor mean_row_kl(const Tensor& p, const Tensor& q) {
  if (p.rows() == 0) return ad::constant_scalar(0.0);
  const Tensor log_p = ad::log(ad::clamp(p, kProbClamp, 1.0 - kProbClamp));
  const Tensor log_q = ad::log(ad::clamp(q, kProbClamp, 1.0 - kProbClamp));
  return ad::scale(ad::sum(ad::mul(p, ad::sub(log_p, log_q))), 1.0 / static_cast<double>(p.rows()));
}

Tensor kl_loss(const DTCOutputs& out, bool stop_teacher_grad) {
  auto teacher = [stop_teacher_grad](const Tensor& t) { return stop_teacher_grad ? ad::detach(t) : t; };
  return ad::add(mean_row_kl(teacher(out.p_s), out.p_hat_s),
                 mean_row_kl(teacher(out.p_t), out.p_hat_t));
}

Tensor positive_column(const Tensor& probs) { return ad::slice_cols(probs, 1, 1); }

Tensor binary_cross_entropy(const Tensor& positive_prob, const std::vector<double>& targets) {
  if (positive_prob.cols() != 1 || positive_prob.rows() != static_cast<Index>(targets.size()))
    throw UsageError("bce: probabilities must be a column matching the targets");
  if (targets.empty()) return ad::constant_scalar(0.0);
  const Index n = positive_prob.rows();
  ad::Mat y(n, 1);
  for (Index k = 0; k < n; ++k) y(k, 0) = targets[k];
  const Tensor p = ad::clamp(positive_prob, kProbClamp, 1.0 - kProbClamp);
  const Tensor yt = ad::constant(y);
  const Tensor one_minus_y = ad::constant((1.0 - y.array()).matrix());
  const Tensor ll = ad::add(ad::mul(yt, ad::log(p)),
                            ad::mul(one_minus_y, ad::log(ad::add_scalar(ad::scale(p, -1.0), 1.0))));
  return ad::scale(ad::sum(ll), -1.0 / static_cast<double>(n));
}

namespace {

struct LabeledRows {
  std::vector<Index> rows;  // row positions within the population block
  std::vector<double> labels;
};

LabeledRows train_rows(const VSGraph& g, Population pop) {
  LabeledRows r;
  const auto& ids = g.ids_of(pop);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Index i = ids[k];
    if (g.split()[i] == Split::Train && g.labels()[i] != kNoLabel) {
      r.rows.push_back(static_cast<Index>(k));
      r.labels.push_back(static_cast<double>(g.labels()[i]));
    }
  }
  return r;
}

}  // namespace

ClassificationLoss classification_loss(const DTCOutputs& out, const VSGraph& g) {
  ClassificationLoss l;
  const LabeledRows vocal = train_rows(g, Population::Vocal);
  const LabeledRows silent = train_rows(g, Population::Silent);
  l.vocal_empty = vocal.rows.empty();
  l.silent_empty = silent.rows.empty();

  auto term = [](const Tensor& probs, const LabeledRows& rows) {
    if (rows.rows.empty()) return ad::constant_scalar(0.0);
    return binary_cross_entropy(positive_column(ad::gather_rows(probs, rows.rows)), rows.labels);
  };
  l.source = term(out.p_s, vocal);
  l.target = term(out.p_t, silent);
  l.generated = term(out.p_hat_t, silent);
  l.total = ad::add(ad::add(l.source, l.target), l.generated);
  return l;
}

Tensor total_loss(const Tensor& clf, const Tensor& kl, const Tensor& dist, double lambda,
                  double gamma) {
  if (lambda < 0.0 || gamma < 0.0) throw UsageError("loss weights must be non-negative");
  Tensor total = clf;
  if (lambda != 0.0) total = ad::add(total, ad::scale(kl, lambda));
  if (gamma != 0.0) total = ad::add(total, ad::scale(dist, gamma));
  return total;
}

std::vector<double> predict_silent(const Tensor& h, const VSGraph& g, const DTCParams& params) {
  ad::NoGradGuard guard;
  const Tensor silent_h = ad::gather_rows(h, g.silent_ids());
  const Tensor probs = params.transfer.apply(params.source).probabilities(silent_h);
  std::vector<double> out(static_cast<std::size_t>(probs.rows()));
  for (Index k = 0; k < probs.rows(); ++k) out[k] = probs.value()(k, 1);
  return out;
}

}  // namespace ktgnn
