#pragma once

// Dense-matrix reverse-mode automatic differentiation.
//
// A Tensor is a shared handle to a node of a dynamically recorded computation
// graph. Every op returns a new node that remembers its parents and a local
// backward rule; Tensor::backward() on a 1x1 result walks the graph in a fixed
// reverse topological order and accumulates gradients into every node that
// requires them. Nodes whose inputs are all constants are not recorded.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ktgnn::ad {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = std::int64_t;

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Mat value;
  Mat grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backward_fn;

  /// Adds `g` into grad, allocating it on first use.
  void accumulate(const Mat& g);
  Mat& grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  [[nodiscard]] bool defined() const { return node_ != nullptr; }
  [[nodiscard]] const Mat& value() const { return node_->value; }
  /// Mutable access for optimizers and checkpoint loading. Only valid on leaves.
  [[nodiscard]] Mat& mutable_value() { return node_->value; }
  /// Gradient; a zero matrix of the right shape if nothing was accumulated.
  [[nodiscard]] Mat grad() const;
  [[nodiscard]] bool has_grad() const { return node_->grad.size() != 0; }
  [[nodiscard]] bool requires_grad() const { return node_->requires_grad; }
  [[nodiscard]] Index rows() const { return node_->value.rows(); }
  [[nodiscard]] Index cols() const { return node_->value.cols(); }
  [[nodiscard]] double item() const;
  [[nodiscard]] const NodePtr& node() const { return node_; }

  void zero_grad() const { node_->grad.resize(0, 0); }

  /// Reverse sweep from this 1x1 tensor.
  void backward() const;

 private:
  NodePtr node_;
};

/// Trainable leaf.
Tensor parameter(Mat value);
/// Non-trainable leaf.
Tensor constant(Mat value);
Tensor constant_scalar(double v);

/// While alive, ops on this thread record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
[[nodiscard]] bool grad_enabled();

// -- linear algebra --------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// a (r x c) + row (1 x c), broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
/// a (r x c) * row (1 x c), broadcast over rows.
Tensor mul_row(const Tensor& a, const Tensor& row);
/// a (r x c) * col (r x 1), broadcast over columns.
Tensor mul_col(const Tensor& a, const Tensor& col);
/// Repeats a 1 x c row `n` times.
Tensor repeat_row(const Tensor& row, Index n);

// -- shape -----------------------------------------------------------------
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& a, Index start, Index count);
Tensor slice_cols(const Tensor& a, Index start, Index count);
/// Row-major reinterpretation.
Tensor reshape(const Tensor& a, Index rows, Index cols);
/// Same value, cut from the graph.
Tensor detach(const Tensor& a);

// -- indexing --------------------------------------------------------------
/// out[k] = a[index[k]]
Tensor gather_rows(const Tensor& a, std::span<const Index> index);
/// out[index[k]] += src[k], out has `out_rows` rows.
Tensor scatter_add_rows(const Tensor& src, std::span<const Index> index, Index out_rows);

// -- elementwise -----------------------------------------------------------
inline constexpr double kLeakySlope = 0.2;
Tensor leaky_relu(const Tensor& x, double slope = kLeakySlope);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor log(const Tensor& x);
/// Gradient passes where lo <= x <= hi, zero elsewhere.
Tensor clamp(const Tensor& x, double lo, double hi);

// -- normalization and reductions ------------------------------------------
/// Softmax of a column within groups: segment_ids[k] in [0, num_segments).
Tensor segment_softmax(const Tensor& scores, std::span<const Index> segment_ids,
                       Index num_segments);
Tensor row_softmax(const Tensor& x);
/// Column means as a 1 x c row.
Tensor mean_rows(const Tensor& x);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor squared_norm(const Tensor& x);

/// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::uint64_t seed);

}  // namespace ktgnn::ad
