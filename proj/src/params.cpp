#include "ktgnn/params.hpp"

#include "ktgnn/errors.hpp"

#include <cmath>

namespace ktgnn {

void ParamSet::add(std::string name, const Tensor& t) {
  if (!t.requires_grad()) throw UsageError("parameter '" + name + "' does not require grad");
  for (const auto& p : items_)
    if (p.name == name) throw UsageError("duplicate parameter name '" + name + "'");
  items_.push_back({std::move(name), t});
}

void ParamSet::extend(const ParamSet& other) {
  for (const auto& p : other.items_) add(p.name, p.tensor);
}

Tensor ParamSet::find(const std::string& name) const {
  for (const auto& p : items_)
    if (p.name == name) return p.tensor;
  throw UsageError("unknown parameter '" + name + "'");
}

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += static_cast<std::size_t>(p.tensor.value().size());
  return n;
}

void ParamSet::zero_grad() const {
  for (auto& p : items_) p.tensor.zero_grad();
}

std::vector<ad::Mat> ParamSet::snapshot() const {
  std::vector<ad::Mat> out;
  out.reserve(items_.size());
  for (const auto& p : items_) out.push_back(p.tensor.value());
  return out;
}

void ParamSet::restore(const std::vector<ad::Mat>& values) const {
  if (values.size() != items_.size()) throw UsageError("restore: parameter count mismatch");
  for (std::size_t k = 0; k < items_.size(); ++k) {
    Tensor t = items_[k].tensor;
    if (t.rows() != values[k].rows() || t.cols() != values[k].cols())
      throw UsageError("restore: shape mismatch for '" + items_[k].name + "'");
    t.mutable_value() = values[k];
  }
}

ad::Mat uniform(ad::Index rows, ad::Index cols, double scale, Rng& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  ad::Mat m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

ad::Mat glorot_uniform(ad::Index rows, ad::Index cols, Rng& rng) {
  return uniform(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

}  // namespace ktgnn
