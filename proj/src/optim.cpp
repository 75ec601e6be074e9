#include "ktgnn/optim.hpp"

#include "ktgnn/errors.hpp"

#include <cmath>

namespace ktgnn {

void adam_step(const ParamSet& params, AdamState& state, const AdamConfig& cfg) {
  const auto& items = params.items();
  if (state.m.empty()) {
    for (const auto& p : items) {
      state.m.push_back(ad::Mat::Zero(p.tensor.rows(), p.tensor.cols()));
      state.v.push_back(ad::Mat::Zero(p.tensor.rows(), p.tensor.cols()));
    }
  }
  if (state.m.size() != items.size()) throw UsageError("adam: state does not match parameters");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(cfg.beta1, t);
  const double correct2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < items.size(); ++k) {
    Tensor param = items[k].tensor;
    ad::Mat g = param.grad();
    if (cfg.weight_decay != 0.0) g += cfg.weight_decay * param.value();
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g.cwiseAbs2();
    const auto m_hat = state.m[k].array() / correct1;
    const auto v_hat = state.v[k].array() / correct2;
    param.mutable_value().array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
  }
}

}  // namespace ktgnn
