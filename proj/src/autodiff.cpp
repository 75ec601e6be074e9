#include "ktgnn/autodiff.hpp"

#include "ktgnn/errors.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <random>
#include <sstream>
#include <unordered_set>

namespace ktgnn::ad {

namespace {

thread_local bool g_grad_enabled = true;

std::string shape_str(const Mat& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw UsageError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

Tensor make_leaf(Mat value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

// Records a result node when gradients are enabled and any input needs them.
Tensor make_result(Mat value, std::vector<NodePtr> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    const bool any = std::any_of(parents.begin(), parents.end(),
                                 [](const NodePtr& p) { return p->requires_grad; });
    if (any) {
      node->requires_grad = true;
      node->parents = std::move(parents);
      node->backward_fn = std::move(fn);
    }
  }
  return Tensor(std::move(node));
}

template <typename F>
Tensor unary(const Tensor& x, Mat value, F local_grad) {
  return make_result(std::move(value), {x.node()}, [local_grad](Node& self) {
    Node& in = *self.parents[0];
    if (!in.requires_grad) return;
    in.accumulate(local_grad(in.value, self.value).cwiseProduct(self.grad));
  });
}

}  // namespace

void Node::accumulate(const Mat& g) {
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

Mat& Node::grad_buffer() {
  if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
  return grad;
}

Mat Tensor::grad() const {
  if (node_->grad.size() == 0) return Mat::Zero(rows(), cols());
  return node_->grad;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) throw UsageError("item: tensor is " + shape_str(value()));
  return value()(0, 0);
}

void Tensor::backward() const {
  if (rows() != 1 || cols() != 1) throw UsageError("backward: output must be 1x1");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; parent order fixes the visit order.
  std::vector<Node*> order;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(Mat::Constant(1, 1, 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->backward_fn || n->grad.size() == 0) continue;
    n->backward_fn(*n);
    n->grad.resize(0, 0);  // intermediate gradients are not kept
  }
}

Tensor parameter(Mat value) { return make_leaf(std::move(value), true); }
Tensor constant(Mat value) { return make_leaf(std::move(value), false); }
Tensor constant_scalar(double v) { return constant(Mat::Constant(1, 1, v)); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

namespace {

// dst (+)= a * b. Thin inner dimensions go through the coefficient-wise
// product, which beats the blocked kernel on outer products.
template <typename A, typename B>
void product_into(Mat& dst, const A& a, const B& b, bool accumulate) {
  if (a.cols() <= 4) {
    if (accumulate) dst.noalias() += a.lazyProduct(b);
    else dst.noalias() = a.lazyProduct(b);
  } else {
    if (accumulate) dst.noalias() += a * b;
    else dst.noalias() = a * b;
  }
}

template <typename A, typename B>
void grad_product(Node& target, const A& a, const B& b) {
  const bool has = target.grad.size() != 0;
  if (!has) target.grad.resize(target.value.rows(), target.value.cols());
  product_into(target.grad, a, b, has);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Mat out(a.rows(), b.cols());
  product_into(out, a.value(), b.value(), false);
  return make_result(std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& lhs = *self.parents[0];
    Node& rhs = *self.parents[1];
    if (lhs.requires_grad) grad_product(lhs, self.grad, rhs.value.transpose());
    if (rhs.requires_grad) grad_product(rhs, lhs.value.transpose(), self.grad);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a.value(), b.value());
  return make_result(a.value() + b.value(), {a.node(), b.node()}, [](Node& self) {
    for (auto& p : self.parents)
      if (p->requires_grad) p->accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a.value(), b.value());
  return make_result(a.value() - b.value(), {a.node(), b.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(-self.grad);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a.value(), b.value());
  return make_result(a.value().cwiseProduct(b.value()), {a.node(), b.node()}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& y = *self.parents[1];
    if (x.requires_grad) x.accumulate(self.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(self.grad.cwiseProduct(x.value));
  });
}

Tensor scale(const Tensor& a, double s) {
  return make_result(a.value() * s, {a.node()}, [s](Node& self) {
    self.parents[0]->accumulate(self.grad * s);
  });
}

Tensor add_scalar(const Tensor& a, double s) {
  return make_result((a.value().array() + s).matrix(), {a.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad);
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.value(), row.value());
  Mat out = a.value().rowwise() + row.value().row(0);
  return make_result(std::move(out), {a.node(), row.node()}, [](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad);
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(self.grad.colwise().sum());
  });
}

Tensor mul_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("mul_row", a.value(), row.value());
  Mat out = a.value().array().rowwise() * row.value().row(0).array();
  return make_result(std::move(out), {a.node(), row.node()}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& r = *self.parents[1];
    if (x.requires_grad)
      x.accumulate((self.grad.array().rowwise() * r.value.row(0).array()).matrix());
    if (r.requires_grad) r.accumulate(self.grad.cwiseProduct(x.value).colwise().sum());
  });
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) shape_error("mul_col", a.value(), col.value());
  Mat out = a.value().array().colwise() * col.value().col(0).array();
  return make_result(std::move(out), {a.node(), col.node()}, [](Node& self) {
    Node& x = *self.parents[0];
    Node& c = *self.parents[1];
    if (x.requires_grad)
      x.accumulate((self.grad.array().colwise() * c.value.col(0).array()).matrix());
    if (c.requires_grad) c.accumulate(self.grad.cwiseProduct(x.value).rowwise().sum());
  });
}

Tensor repeat_row(const Tensor& row, Index n) {
  if (row.rows() != 1) throw UsageError("repeat_row: input must have one row");
  Mat out = row.value().replicate(n, 1);
  return make_result(std::move(out), {row.node()}, [](Node& self) {
    self.parents[0]->accumulate(self.grad.colwise().sum());
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a.value(), b.value());
  Mat out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  const Index ca = a.cols();
  const Index cb = b.cols();
  return make_result(std::move(out), {a.node(), b.node()}, [ca, cb](Node& self) {
    if (self.parents[0]->requires_grad) self.parents[0]->accumulate(self.grad.leftCols(ca));
    if (self.parents[1]->requires_grad) self.parents[1]->accumulate(self.grad.rightCols(cb));
  });
}

Tensor slice_rows(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows())
    throw UsageError("slice_rows: range out of bounds");
  Mat out = a.value().middleRows(start, count);
  return make_result(std::move(out), {a.node()}, [start, count](Node& self) {
    self.parents[0]->grad_buffer().middleRows(start, count) += self.grad;
  });
}

Tensor slice_cols(const Tensor& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols())
    throw UsageError("slice_cols: range out of bounds");
  Mat out = a.value().middleCols(start, count);
  return make_result(std::move(out), {a.node()}, [start, count](Node& self) {
    self.parents[0]->grad_buffer().middleCols(start, count) += self.grad;
  });
}

Tensor reshape(const Tensor& a, Index rows, Index cols) {
  if (rows * cols != a.value().size()) throw UsageError("reshape: element count mismatch");
  Mat out = Eigen::Map<const Mat>(a.value().data(), rows, cols);
  const Index r0 = a.rows();
  const Index c0 = a.cols();
  return make_result(std::move(out), {a.node()}, [r0, c0](Node& self) {
    self.parents[0]->accumulate(Eigen::Map<const Mat>(self.grad.data(), r0, c0));
  });
}

Tensor detach(const Tensor& a) { return constant(a.value()); }

Tensor gather_rows(const Tensor& a, std::span<const Index> index) {
  const Index n = static_cast<Index>(index.size());
  Mat out(n, a.cols());
  for (Index k = 0; k < n; ++k) {
    const Index r = index[k];
    if (r < 0 || r >= a.rows()) throw UsageError("gather_rows: index out of range");
    out.row(k) = a.value().row(r);
  }
  std::vector<Index> idx(index.begin(), index.end());
  return make_result(std::move(out), {a.node()}, [idx = std::move(idx)](Node& self) {
    Mat& g = self.parents[0]->grad_buffer();
    for (std::size_t k = 0; k < idx.size(); ++k) g.row(idx[k]) += self.grad.row(k);
  });
}

Tensor scatter_add_rows(const Tensor& src, std::span<const Index> index, Index out_rows) {
  if (static_cast<Index>(index.size()) != src.rows())
    throw UsageError("scatter_add_rows: index length must equal source rows");
  Mat out = Mat::Zero(out_rows, src.cols());
  for (Index k = 0; k < src.rows(); ++k) {
    const Index r = index[k];
    if (r < 0 || r >= out_rows) throw UsageError("scatter_add_rows: index out of range");
    out.row(r) += src.value().row(k);
  }
  std::vector<Index> idx(index.begin(), index.end());
  return make_result(std::move(out), {src.node()}, [idx = std::move(idx)](Node& self) {
    Mat& g = self.parents[0]->grad_buffer();
    for (std::size_t k = 0; k < idx.size(); ++k) g.row(k) += self.grad.row(idx[k]);
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  Mat out = x.value().unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  return unary(x, std::move(out), [slope](const Mat& in, const Mat&) {
    return Mat(in.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
  });
}

Tensor tanh(const Tensor& x) {
  Mat out = x.value().array().tanh().matrix();
  return unary(x, std::move(out), [](const Mat&, const Mat& y) {
    return Mat((1.0 - y.array().square()).matrix());
  });
}

Tensor sigmoid(const Tensor& x) {
  Mat out = x.value().unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return unary(x, std::move(out), [](const Mat&, const Mat& y) {
    return Mat((y.array() * (1.0 - y.array())).matrix());
  });
}

Tensor log(const Tensor& x) {
  Mat out = x.value().array().log().matrix();
  return unary(x, std::move(out), [](const Mat& in, const Mat&) {
    return Mat(in.array().inverse().matrix());
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  Mat out = x.value().cwiseMax(lo).cwiseMin(hi);
  return unary(x, std::move(out), [lo, hi](const Mat& in, const Mat&) {
    return Mat(in.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; }));
  });
}

Tensor segment_softmax(const Tensor& scores, std::span<const Index> segment_ids,
                       Index num_segments) {
  if (scores.cols() != 1) throw UsageError("segment_softmax: scores must be a column");
  if (static_cast<Index>(segment_ids.size()) != scores.rows())
    throw UsageError("segment_softmax: segment_ids length must equal score count");
  const Index n = scores.rows();
  std::vector<double> seg_max(num_segments, -std::numeric_limits<double>::infinity());
  for (Index k = 0; k < n; ++k) {
    const Index s = segment_ids[k];
    if (s < 0 || s >= num_segments) throw UsageError("segment_softmax: segment id out of range");
    seg_max[s] = std::max(seg_max[s], scores.value()(k, 0));
  }
  Mat out(n, 1);
  std::vector<double> seg_sum(num_segments, 0.0);
  for (Index k = 0; k < n; ++k) {
    const double e = std::exp(scores.value()(k, 0) - seg_max[segment_ids[k]]);
    out(k, 0) = e;
    seg_sum[segment_ids[k]] += e;
  }
  for (Index k = 0; k < n; ++k) out(k, 0) /= seg_sum[segment_ids[k]];

  std::vector<Index> ids(segment_ids.begin(), segment_ids.end());
  return make_result(std::move(out), {scores.node()},
                     [ids = std::move(ids), num_segments](Node& self) {
                       // d s_k = y_k (g_k - sum_{l in seg} g_l y_l)
                       std::vector<double> dot(num_segments, 0.0);
                       const Mat& y = self.value;
                       for (std::size_t k = 0; k < ids.size(); ++k)
                         dot[ids[k]] += self.grad(k, 0) * y(k, 0);
                       Mat& g = self.parents[0]->grad_buffer();
                       for (std::size_t k = 0; k < ids.size(); ++k)
                         g(k, 0) += y(k, 0) * (self.grad(k, 0) - dot[ids[k]]);
                     });
}

Tensor row_softmax(const Tensor& x) {
  Mat out = x.value();
  for (Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return make_result(std::move(out), {x.node()}, [](Node& self) {
    const Mat& y = self.value;
    Eigen::VectorXd dot = y.cwiseProduct(self.grad).rowwise().sum();
    Mat g = y.cwiseProduct((self.grad.colwise() - dot));
    self.parents[0]->accumulate(g);
  });
}

Tensor mean_rows(const Tensor& x) {
  if (x.rows() == 0) throw UsageError("mean_rows: empty input");
  const double n = static_cast<double>(x.rows());
  Mat out = x.value().colwise().sum() / n;
  return make_result(std::move(out), {x.node()}, [n](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate((self.grad / n).replicate(in.value.rows(), 1));
  });
}

Tensor sum(const Tensor& x) {
  return make_result(Mat::Constant(1, 1, x.value().sum()), {x.node()}, [](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate(Mat::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0)));
  });
}

Tensor mean(const Tensor& x) {
  if (x.value().size() == 0) throw UsageError("mean: empty input");
  const double n = static_cast<double>(x.value().size());
  return make_result(Mat::Constant(1, 1, x.value().sum() / n), {x.node()}, [n](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate(Mat::Constant(in.value.rows(), in.value.cols(), self.grad(0, 0) / n));
  });
}

Tensor squared_norm(const Tensor& x) {
  return make_result(Mat::Constant(1, 1, x.value().squaredNorm()), {x.node()}, [](Node& self) {
    Node& in = *self.parents[0];
    in.accumulate(in.value * (2.0 * self.grad(0, 0)));
  });
}

Tensor dropout(const Tensor& x, double rate, std::uint64_t seed) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw UsageError("dropout: rate must be < 1");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(1.0 - rate);
  Mat mask(x.rows(), x.cols());
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
  return mul(x, constant(std::move(mask)));
}

}  // namespace ktgnn::ad
