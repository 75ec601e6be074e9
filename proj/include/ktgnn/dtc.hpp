#pragma once

// Domain-transferable classifier: a source classifier fit on vocal nodes, a
// target classifier fit on silent nodes, and a transfer network that maps the
// source classifier's parameters to a generated target classifier.

#include "ktgnn/autodiff.hpp"
#include "ktgnn/graph.hpp"
#include "ktgnn/params.hpp"

#include <utility>
#include <vector>

namespace ktgnn {

inline constexpr Index kNumClasses = 2;
inline constexpr double kProbClamp = 1e-12;
/// Init scale of the transfer net's output projection; the generated
/// classifier starts near the source classifier.
inline constexpr double kTransferInitScale = 0.01;

struct LinearClassifier {
  Tensor weight;  // d x C
  Tensor bias;    // 1 x C

  static LinearClassifier init(Index d, Index classes, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix) const;
  /// Row-softmax probabilities, rows(h) x C.
  [[nodiscard]] Tensor probabilities(const Tensor& h) const;
};

/// Residual two-layer perceptron over the flattened [weight || bias] vector:
/// out = in + tanh(in M1 + c1) M2 + c2. With M2 = 0 and c2 = 0 the transfer
/// is the identity.
struct TransferNet {
  Tensor m1, c1, m2, c2;

  static TransferNet init(Index flat, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix) const;
  [[nodiscard]] LinearClassifier apply(const LinearClassifier& source) const;
  void set_identity();
};

struct DTCParams {
  LinearClassifier source;
  LinearClassifier target;
  TransferNet transfer;

  static DTCParams init(Index d, Index classes, Rng& rng);
  void register_into(ParamSet& set, const std::string& prefix = "dtc.") const;
};

struct DTCOutputs {
  // Probabilities on every node for each classifier (N x C).
  Tensor prob_source_all;
  Tensor prob_target_all;
  Tensor prob_generated_all;
  // Population restrictions used by the losses.
  Tensor p_s;      // source classifier on vocal nodes
  Tensor p_t;      // target classifier on silent nodes
  Tensor p_hat_s;  // generated classifier on vocal nodes
  Tensor p_hat_t;  // generated classifier on silent nodes
};

DTCOutputs dtc_forward(const Tensor& h, const VSGraph& g, const DTCParams& params);

/// KL(P^s || P_hat^s) + KL(P^t || P_hat^t), each a mean of row-wise KL. With
/// `stop_teacher_grad`, P^s and P^t are treated as constants.
Tensor kl_loss(const DTCOutputs& out, bool stop_teacher_grad = true);

/// Row-wise KL(p || q) averaged over rows; probabilities are clamped first.
Tensor mean_row_kl(const Tensor& p, const Tensor& q);

/// -(1/n) sum y log p + (1 - y) log(1 - p), with p clamped to [1e-12, 1 - 1e-12].
Tensor binary_cross_entropy(const Tensor& positive_prob, const std::vector<double>& targets);

struct ClassificationLoss {
  Tensor source;     // BCE of CLF^s on vocal train nodes
  Tensor target;     // BCE of CLF^t on silent train nodes
  Tensor generated;  // BCE of the generated classifier on silent train nodes
  Tensor total;
  bool vocal_empty = false;
  bool silent_empty = false;
};

/// Sum of the three BCE terms over train-split labeled nodes. A population
/// without labeled train nodes contributes zero.
ClassificationLoss classification_loss(const DTCOutputs& out, const VSGraph& g);

Tensor total_loss(const Tensor& clf, const Tensor& kl, const Tensor& dist, double lambda,
                  double gamma);

/// Generated-classifier positive-class probability per silent node, in
/// silent_ids order.
std::vector<double> predict_silent(const Tensor& h, const VSGraph& g, const DTCParams& params);

/// Column 1 of a probability matrix.
Tensor positive_column(const Tensor& probs);

}  // namespace ktgnn
