#pragma once

// Domain-adapted message passing.
//
// Messages into a node are scored and projected with parameters chosen by the
// *target's* population. A message that crosses populations is first moved
// along the current layer's vocal-minus-silent mean difference by a gated,
// signed amount; within-population messages are passed unchanged.

#include "ktgnn/autodiff.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/params.hpp"

#include <array>
#include <vector>

namespace ktgnn {

struct DAMPLayerParams {
  std::array<Tensor, 2> w_pop;    // d_in x d_out, indexed by target population
  std::array<Tensor, 2> a_pop;    // 2*d_out x 1, [source half; target half]
  std::array<Tensor, 2> a_shift;  // 2*d_in x 1, indexed by source population

  static DAMPLayerParams init(Index d_in, Index d_out, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix) const;
  [[nodiscard]] Index d_in() const { return w_pop[0].rows(); }
  [[nodiscard]] Index d_out() const { return w_pop[0].cols(); }
};

struct LayerMeans {
  Tensor vocal;   // 1 x d
  Tensor silent;  // 1 x d
};

LayerMeans layer_means(const VSGraph& g, const Tensor& h);

/// Edge bookkeeping for one graph; built once.
struct MessagePlan {
  struct Group {
    std::vector<Index> src;        // grouped by dst, CSR order
    std::vector<Index> dst;
    std::vector<Index> cross_pos;  // positions in src/dst of cross-population edges
    std::vector<Index> cross_src;  // src[cross_pos[k]]
    Population cross_src_pop = Population::Vocal;
    ad::Mat self_mask;             // N x 1, 1 for nodes handled by this group
  };
  // Group g holds the edges whose target uses parameter set g.
  std::vector<Group> groups;
  bool domain_adapted = true;
};

/// With `domain_adapted`, edges are grouped by target population and
/// cross-population edges are calibrated; otherwise one shared group and no
/// calibration (plain attention message passing).
MessagePlan plan_messages(const VSGraph& g, bool domain_adapted = true);

/// Sign factor (-1)^target: +1 into vocal targets, -1 into silent targets.
inline double shift_sign(Population target) { return target == Population::Vocal ? 1.0 : -1.0; }

/// Calibration vector added to a source row h_i for an edge i -> j:
/// zero within a population, otherwise sign(j) * tanh([h_i || diff] a_shift[pop(i)]) * diff.
Tensor distribution_shift(const Tensor& h_i, const LayerMeans& means, Population src_pop,
                          Population dst_pop, const DAMPLayerParams& params);

struct DAMPOptions {
  bool raw_scores = false;
};

/// One layer; output is N x d_out.
Tensor damp_layer_forward(const VSGraph& g, const MessagePlan& plan, const Tensor& h_in,
                          const DAMPLayerParams& params, const DAMPOptions& opts = {});

}  // namespace ktgnn
