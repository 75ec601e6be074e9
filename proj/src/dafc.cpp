#include "ktgnn/dafc.hpp"

#include "ktgnn/errors.hpp"

namespace ktgnn {

DAFCParams DAFCParams::init(Index d_obs, Index d_unobs, Index d_att, Rng& rng) {
  DAFCParams p;
  p.w_s = ad::parameter(glorot_uniform(d_obs, d_att, rng));
  p.w_v = ad::parameter(glorot_uniform(d_obs, d_att, rng));
  p.a_vs = ad::parameter(uniform(2 * d_att, 1, kAttentionInitScale, rng));
  p.w_o2u = ad::parameter(glorot_uniform(d_obs, d_unobs, rng));
  p.w_g = ad::parameter(glorot_uniform(2 * d_unobs, d_unobs, rng));
  return p;
}

void DAFCParams::register_into(ParamSet& set, const std::string& prefix) const {
  set.add(prefix + "w_s", w_s);
  set.add(prefix + "w_v", w_v);
  set.add(prefix + "a_vs", a_vs);
  set.add(prefix + "w_o2u", w_o2u);
  set.add(prefix + "w_g", w_g);
}

CompletionPlan plan_completion(const VSGraph& g, int max_iterations) {
  if (max_iterations < 1) throw UsageError("completion needs at least one iteration (K >= 1)");
  CompletionPlan plan;
  plan.max_iterations = max_iterations;
  plan.completed_at_iter.assign(g.num_nodes(), -1);
  for (Index v : g.vocal_ids()) plan.completed_at_iter[v] = 0;

  for (int k = 1; k <= max_iterations; ++k) {
    CompletionPlan::Iteration it;
    for (Index i : g.silent_ids()) {
      if (plan.completed_at_iter[i] != -1) continue;
      bool any = false;
      for (Index j : g.neighbors(i)) {
        const int at = plan.completed_at_iter[j];
        if (at != -1 && at < k) {
          it.src.push_back(j);
          it.dst.push_back(i);
          any = true;
        }
      }
      if (any) it.completed.push_back(i);
    }
    if (it.completed.empty()) break;
    for (Index i : it.completed) plan.completed_at_iter[i] = k;
    plan.iterations.push_back(std::move(it));
  }
  return plan;
}

Tensor unobservable_domain_difference(const PopulationMeans& means, const DAFCParams& params) {
  Mat diff = means.mean_obs_vocal - means.mean_obs_silent;
  return ad::matmul(ad::constant(std::move(diff)), params.w_o2u);
}

Tensor calibrate_vocal_features(const Tensor& x_unobs, const Tensor& delta, const DAFCParams& params) {
  const Tensor gate_in = ad::concat_cols(x_unobs, ad::repeat_row(delta, x_unobs.rows()));
  const Tensor gate = ad::tanh(ad::matmul(gate_in, params.w_g));
  return ad::sub(x_unobs, ad::mul_row(gate, delta));
}

Tensor importance_scores(const Tensor& x_src_obs, const Tensor& x_dst_obs, const Tensor& w_src,
                         const Tensor& w_dst, const Tensor& a_vs) {
  const Tensor joined = ad::concat_cols(ad::matmul(x_src_obs, w_src), ad::matmul(x_dst_obs, w_dst));
  return ad::leaky_relu(ad::matmul(joined, a_vs));
}

CompletionResult complete_features(const VSGraph& g, const DAFCParams& params,
                                   const CompletionPlan& plan, const Tensor& delta,
                                   bool raw_scores) {
  const Index n = g.num_nodes();
  const Index d_att = params.d_att();
  const Tensor x_obs = ad::constant(g.x_obs());

  // [x_j W_v || x_i W_s] a = (x_j W_v) a_src + (x_i W_s) a_dst, so scores
  // factor into one source term and one target term per node.
  const Tensor a_src = ad::slice_rows(params.a_vs, 0, d_att);
  const Tensor a_dst = ad::slice_rows(params.a_vs, d_att, d_att);
  const Tensor src_term = ad::matmul(ad::matmul(x_obs, params.w_v), a_src);
  const Tensor dst_term = ad::matmul(ad::matmul(x_obs, params.w_s), a_dst);

  // Vocal rows are raw observations; silent rows start at zero.
  Tensor current = ad::constant(g.x_unobs());

  // Calibrated vocal features, indexed by position in vocal_ids.
  std::vector<Index> vocal_pos(n, -1);
  for (std::size_t k = 0; k < g.vocal_ids().size(); ++k) vocal_pos[g.vocal_ids()[k]] = static_cast<Index>(k);
  Tensor calibrated;
  if (!plan.iterations.empty() && !g.vocal_ids().empty()) {
    const Tensor vocal_rows = ad::gather_rows(current, g.vocal_ids());
    calibrated = calibrate_vocal_features(vocal_rows, delta, params);
  }

  for (std::size_t k = 0; k < plan.iterations.size(); ++k) {
    const auto& it = plan.iterations[k];
    Tensor source_rows;
    if (k == 0) {
      std::vector<Index> pos(it.src.size());
      for (std::size_t e = 0; e < it.src.size(); ++e) pos[e] = vocal_pos[it.src[e]];
      source_rows = ad::gather_rows(calibrated, pos);
    } else {
      source_rows = ad::gather_rows(current, it.src);
    }
    Tensor scores = ad::leaky_relu(
        ad::add(ad::gather_rows(src_term, it.src), ad::gather_rows(dst_term, it.dst)));
    const Tensor weights = raw_scores ? scores : ad::segment_softmax(scores, it.dst, n);
    const Tensor messages = ad::mul_col(source_rows, weights);
    current = ad::add(current, ad::scatter_add_rows(messages, it.dst, n));
  }

  CompletionResult r;
  r.x_unobs_completed = current;
  r.completed_at_iter = plan.completed_at_iter;
  for (const auto& it : plan.iterations) r.frontier_sets.push_back(it.completed);
  return r;
}

Tensor distribution_consistency_loss(const VSGraph& g, const CompletionResult& result,
                                     const Tensor& delta) {
  std::vector<Index> done;
  for (Index i : g.silent_ids())
    if (result.completed_at_iter[i] >= 1) done.push_back(i);
  if (done.empty()) throw DataError("distribution-consistency loss: no completed silent node");
  if (g.vocal_ids().empty()) throw DataError("distribution-consistency loss: no vocal node");

  const Tensor vocal_mean = ad::mean_rows(ad::constant(g.vocal_unobs_rows().values));
  const Tensor silent_mean = ad::mean_rows(ad::gather_rows(result.x_unobs_completed, done));
  return ad::squared_norm(ad::sub(delta, ad::sub(vocal_mean, silent_mean)));
}

}  // namespace ktgnn
