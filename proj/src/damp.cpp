#include "ktgnn/damp.hpp"

#include "ktgnn/errors.hpp"

namespace ktgnn {

DAMPLayerParams DAMPLayerParams::init(Index d_in, Index d_out, Rng& rng) {
  DAMPLayerParams p;
  for (int k = 0; k < 2; ++k) {
    p.w_pop[k] = ad::parameter(glorot_uniform(d_in, d_out, rng));
    p.a_pop[k] = ad::parameter(uniform(2 * d_out, 1, kAttentionInitScale, rng));
    p.a_shift[k] = ad::parameter(uniform(2 * d_in, 1, kAttentionInitScale, rng));
  }
  return p;
}

void DAMPLayerParams::register_into(ParamSet& set, const std::string& prefix) const {
  static constexpr const char* kPop[2] = {"vocal", "silent"};
  for (int k = 0; k < 2; ++k) {
    set.add(prefix + "w_" + kPop[k], w_pop[k]);
    set.add(prefix + "a_" + kPop[k], a_pop[k]);
    set.add(prefix + "a_shift_" + kPop[k], a_shift[k]);
  }
}

LayerMeans layer_means(const VSGraph& g, const Tensor& h) {
  if (g.vocal_ids().empty() || g.silent_ids().empty())
    throw DataError("layer means need both populations to be non-empty");
  return {ad::mean_rows(ad::gather_rows(h, g.vocal_ids())),
          ad::mean_rows(ad::gather_rows(h, g.silent_ids()))};
}

MessagePlan plan_messages(const VSGraph& g, bool domain_adapted) {
  MessagePlan plan;
  plan.domain_adapted = domain_adapted;
  const Index n = g.num_nodes();
  plan.groups.resize(domain_adapted ? 2 : 1);
  for (auto& grp : plan.groups) grp.self_mask = ad::Mat::Zero(n, 1);
  if (domain_adapted) {
    plan.groups[0].cross_src_pop = Population::Silent;
    plan.groups[1].cross_src_pop = Population::Vocal;
  }
  for (Index j = 0; j < n; ++j) {
    const std::size_t gi = domain_adapted ? static_cast<std::size_t>(g.population(j)) : 0;
    auto& grp = plan.groups[gi];
    grp.self_mask(j, 0) = 1.0;
    for (Index i : g.neighbors(j)) {
      if (domain_adapted && g.population(i) != g.population(j)) {
        grp.cross_pos.push_back(static_cast<Index>(grp.src.size()));
        grp.cross_src.push_back(i);
      }
      grp.src.push_back(i);
      grp.dst.push_back(j);
    }
  }
  return plan;
}

namespace {

// tanh([h || diff] a) for every row of h: h a_top + diff a_bottom.
Tensor shift_gate(const Tensor& h_rows, const Tensor& diff, const Tensor& a_shift) {
  const Index d = h_rows.cols();
  const Tensor from_h = ad::matmul(h_rows, ad::slice_rows(a_shift, 0, d));
  const Tensor from_diff = ad::matmul(diff, ad::slice_rows(a_shift, d, d));
  return ad::tanh(ad::add_row(from_h, from_diff));
}

}  // namespace

Tensor distribution_shift(const Tensor& h_i, const LayerMeans& means, Population src_pop,
                          Population dst_pop, const DAMPLayerParams& params) {
  if (src_pop == dst_pop) return ad::constant(ad::Mat::Zero(1, h_i.cols()));
  const Tensor diff = ad::sub(means.vocal, means.silent);
  const Tensor gate = shift_gate(h_i, diff, params.a_shift[static_cast<int>(src_pop)]);
  return ad::scale(ad::matmul(gate, diff), shift_sign(dst_pop));
}

Tensor damp_layer_forward(const VSGraph& g, const MessagePlan& plan, const Tensor& h_in,
                          const DAMPLayerParams& params, const DAMPOptions& opts) {
  const Index n = g.num_nodes();
  if (h_in.rows() != n) throw UsageError("damp layer: input rows must equal node count");
  if (h_in.cols() != params.d_in()) throw UsageError("damp layer: input width mismatch");
  const Index d_out = params.d_out();

  bool any_cross = false;
  for (const auto& grp : plan.groups) any_cross = any_cross || !grp.cross_pos.empty();
  Tensor diff;
  if (plan.domain_adapted && any_cross) {
    const LayerMeans means = layer_means(g, h_in);
    diff = ad::sub(means.vocal, means.silent);
  }

  Tensor total;
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& grp = plan.groups[gi];
    const Tensor projected = ad::matmul(h_in, params.w_pop[gi]);
    Tensor contrib = ad::mul_col(projected, ad::constant(grp.self_mask));

    if (!grp.src.empty()) {
      Tensor src_proj = ad::gather_rows(projected, grp.src);
      if (plan.domain_adapted && !grp.cross_pos.empty()) {
        // (h_i + c * diff) W = h_i W + c * (diff W)
        const Tensor gate = shift_gate(ad::gather_rows(h_in, grp.cross_src), diff,
                                       params.a_shift[static_cast<int>(grp.cross_src_pop)]);
        const double sign = shift_sign(static_cast<Population>(gi));
        const Tensor shift = ad::matmul(ad::scale(gate, sign), ad::matmul(diff, params.w_pop[gi]));
        src_proj = ad::add(src_proj, ad::scatter_add_rows(shift, grp.cross_pos, src_proj.rows()));
      }
      const Tensor dst_proj = ad::gather_rows(projected, grp.dst);
      const Tensor& a = params.a_pop[gi];
      const Tensor scores =
          ad::add(ad::matmul(ad::leaky_relu(src_proj), ad::slice_rows(a, 0, d_out)),
                  ad::matmul(ad::leaky_relu(dst_proj), ad::slice_rows(a, d_out, d_out)));
      const Tensor weights = opts.raw_scores ? scores : ad::segment_softmax(scores, grp.dst, n);
      contrib = ad::add(contrib, ad::scatter_add_rows(ad::mul_col(src_proj, weights), grp.dst, n));
    }
    total = total.defined() ? ad::add(total, contrib) : contrib;
  }
  return ad::leaky_relu(total);
}

}  // namespace ktgnn
