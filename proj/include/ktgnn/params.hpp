#pragma once

#include "ktgnn/autodiff.hpp"

#include <random>
#include <string>
#include <vector>

namespace ktgnn {

using ad::Tensor;

struct NamedParam {
  std::string name;
  Tensor tensor;
};

/// Ordered collection of named trainable leaves. Order is registration order
/// and fixes optimizer and checkpoint layout.
class ParamSet {
 public:
  void add(std::string name, const Tensor& t);
  void extend(const ParamSet& other);

  [[nodiscard]] const std::vector<NamedParam>& items() const { return items_; }
  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] Tensor find(const std::string& name) const;
  [[nodiscard]] std::size_t num_scalars() const;

  void zero_grad() const;
  [[nodiscard]] std::vector<ad::Mat> snapshot() const;
  void restore(const std::vector<ad::Mat>& values) const;

 private:
  std::vector<NamedParam> items_;
};

using Rng = std::mt19937_64;

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
ad::Mat glorot_uniform(ad::Index rows, ad::Index cols, Rng& rng);
ad::Mat uniform(ad::Index rows, ad::Index cols, double scale, Rng& rng);

/// Attention-vector init scale.
inline constexpr double kAttentionInitScale = 0.1;

}  // namespace ktgnn
