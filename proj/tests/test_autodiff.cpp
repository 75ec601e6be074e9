#include "helpers.hpp"

#include "ktgnn/autodiff.hpp"
#include "ktgnn/errors.hpp"

#include <doctest.h>

using namespace ktgnn;
using namespace ktgnn::testing;
namespace ad = ktgnn::ad;

namespace {

// Contracts an output with a fixed random weight so every entry matters.
ad::Tensor weighted_sum(const ad::Tensor& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(y, ad::constant(random_matrix(y.rows(), y.cols(), rng))));
}

void check_unary(const char* name, const std::function<ad::Tensor(const ad::Tensor&)>& op,
                 bool positive = false) {
  std::mt19937_64 rng(11);
  Mat x0 = random_matrix(3, 4, rng);
  if (positive) x0 = x0.array().abs() + 0.5;
  ad::Tensor x = ad::parameter(x0);
  const GradCheck gc = grad_check({x}, [&] { return weighted_sum(op(x), 5); });
  INFO(name);
  CHECK(gc.max_rel_err < 1e-4);
}

void check_binary(const char* name,
                  const std::function<ad::Tensor(const ad::Tensor&, const ad::Tensor&)>& op,
                  Index br, Index bc) {
  std::mt19937_64 rng(12);
  ad::Tensor a = ad::parameter(random_matrix(3, 4, rng));
  ad::Tensor b = ad::parameter(random_matrix(br, bc, rng));
  const GradCheck gc = grad_check({a, b}, [&] { return weighted_sum(op(a, b), 6); });
  INFO(name);
  CHECK(gc.max_rel_err < 1e-4);
}

}  // namespace

TEST_CASE("elementwise and linear ops match finite differences") {
  check_binary("add", ad::add, 3, 4);
  check_binary("sub", ad::sub, 3, 4);
  check_binary("mul", ad::mul, 3, 4);
  check_binary("matmul", ad::matmul, 4, 2);
  check_binary("add_row", ad::add_row, 1, 4);
  check_binary("mul_row", ad::mul_row, 1, 4);
  check_binary("mul_col", ad::mul_col, 3, 1);
  check_binary("concat_cols", ad::concat_cols, 3, 2);

  check_unary("scale", [](const ad::Tensor& x) { return ad::scale(x, -1.7); });
  check_unary("add_scalar", [](const ad::Tensor& x) { return ad::add_scalar(x, 0.3); });
  check_unary("leaky_relu", [](const ad::Tensor& x) { return ad::leaky_relu(x); });
  check_unary("tanh", [](const ad::Tensor& x) { return ad::tanh(x); });
  check_unary("sigmoid", [](const ad::Tensor& x) { return ad::sigmoid(x); });
  check_unary("log", [](const ad::Tensor& x) { return ad::log(x); }, true);
  check_unary("clamp", [](const ad::Tensor& x) { return ad::clamp(x, -0.5, 0.5); });
  check_unary("row_softmax", [](const ad::Tensor& x) { return ad::row_softmax(x); });
  check_unary("mean_rows", [](const ad::Tensor& x) { return ad::mean_rows(x); });
  check_unary("mean", [](const ad::Tensor& x) { return ad::mean(x); });
  check_unary("squared_norm", [](const ad::Tensor& x) { return ad::squared_norm(x); });
  check_unary("repeat_row", [](const ad::Tensor& x) { return ad::repeat_row(ad::slice_rows(x, 1, 1), 5); });
  check_unary("slice_rows", [](const ad::Tensor& x) { return ad::slice_rows(x, 1, 2); });
  check_unary("slice_cols", [](const ad::Tensor& x) { return ad::slice_cols(x, 1, 2); });
  check_unary("reshape", [](const ad::Tensor& x) { return ad::reshape(x, 2, 6); });
  check_unary("dropout", [](const ad::Tensor& x) { return ad::dropout(x, 0.5, 99); });
}

TEST_CASE("indexing ops match finite differences") {
  const std::vector<Index> idx = {2, 0, 2, 1, 0};
  check_unary("gather_rows", [&](const ad::Tensor& x) { return ad::gather_rows(x, idx); });
  const std::vector<Index> dst = {4, 1, 4};
  check_unary("scatter_add_rows", [&](const ad::Tensor& x) { return ad::scatter_add_rows(x, dst, 6); });

  std::mt19937_64 rng(3);
  ad::Tensor s = ad::parameter(random_matrix(7, 1, rng));
  const std::vector<Index> seg = {0, 0, 2, 2, 2, 3, 0};
  const GradCheck gc = grad_check({s}, [&] { return weighted_sum(ad::segment_softmax(s, seg, 4), 8); });
  CHECK(gc.max_rel_err < 1e-4);
}

TEST_CASE("sum of A*B gradient is B") {
  std::mt19937_64 rng(4);
  const Mat b0 = random_matrix(3, 4, rng);
  ad::Tensor a = ad::parameter(random_matrix(3, 4, rng));
  ad::Tensor b = ad::constant(b0);
  const GradCheck gc = grad_check({a}, [&] { return ad::sum(ad::mul(a, b)); });
  CHECK(gc.max_rel_err < 1e-6);
  CHECK((a.grad() - b0).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(b.requires_grad());
}

TEST_CASE("forward values") {
  ad::Tensor a = ad::constant((Mat(2, 2) << 1, 2, 3, 4).finished());
  ad::Tensor b = ad::constant((Mat(2, 1) << 1, -1).finished());
  CHECK(ad::matmul(a, b).value()(0, 0) == -1.0);
  CHECK(ad::matmul(a, b).value()(1, 0) == -1.0);
  CHECK(ad::mean(a).item() == 2.5);
  CHECK(ad::squared_norm(a).item() == 30.0);
  CHECK(ad::leaky_relu(ad::constant_scalar(-1.0)).item() == doctest::Approx(-ad::kLeakySlope));

  // zero scores inside a segment give uniform weights
  const std::vector<Index> seg = {1, 1, 1, 0};
  const ad::Tensor w = ad::segment_softmax(ad::constant(Mat::Zero(4, 1)), seg, 2);
  CHECK(w.value()(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(w.value()(3, 0) == 1.0);

  const ad::Tensor r = ad::reshape(a, 1, 4);
  CHECK(r.value()(0, 2) == 3.0);
}

TEST_CASE("segment softmax is shift invariant and stable for large scores") {
  const std::vector<Index> seg = {0, 0, 1};
  const Mat s = (Mat(3, 1) << 1000.0, 999.0, -1000.0).finished();
  const Mat w = ad::segment_softmax(ad::constant(s), seg, 2).value();
  CHECK(std::isfinite(w(0, 0)));
  CHECK(w(0, 0) + w(1, 0) == doctest::Approx(1.0));
  CHECK(w(2, 0) == 1.0);
  const Mat w2 = ad::segment_softmax(ad::constant(s.array() - 5.0), seg, 2).value();
  CHECK((w - w2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gradients accumulate over reuse and reset on zero_grad") {
  ad::Tensor x = ad::parameter((Mat(1, 1) << 3.0).finished());
  ad::Tensor y = ad::mul(x, x);  // dy/dx = 2x
  ad::sum(ad::add(y, x)).backward();
  CHECK(x.grad()(0, 0) == 7.0);
  ad::sum(x).backward();
  CHECK(x.grad()(0, 0) == 8.0);
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
  CHECK(x.grad()(0, 0) == 0.0);
}

TEST_CASE("no-grad mode records nothing") {
  ad::Tensor x = ad::parameter(Mat::Ones(2, 2));
  {
    ad::NoGradGuard g;
    CHECK_FALSE(ad::grad_enabled());
    const ad::Tensor y = ad::tanh(x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.node()->parents.empty());
  }
  CHECK(ad::grad_enabled());
  CHECK(ad::tanh(x).requires_grad());
}

TEST_CASE("detach cuts the gradient") {
  ad::Tensor x = ad::parameter(Mat::Ones(1, 1));
  ad::sum(ad::add(ad::detach(ad::scale(x, 5.0)), x)).backward();
  CHECK(x.grad()(0, 0) == 1.0);
}

TEST_CASE("dropout keeps the expectation and is seeded") {
  ad::Tensor x = ad::constant(Mat::Ones(200, 50));
  const Mat a = ad::dropout(x, 0.3, 1).value();
  const Mat b = ad::dropout(x, 0.3, 1).value();
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.mean() == doctest::Approx(1.0).epsilon(0.03));
  CHECK(ad::dropout(x, 0.0, 1).value() == x.value());
}

TEST_CASE("shape errors are reported") {
  ad::Tensor a = ad::constant(Mat::Ones(2, 3));
  CHECK_THROWS_AS(ad::matmul(a, a), UsageError);
  CHECK_THROWS_AS(ad::add(a, ad::constant(Mat::Ones(3, 2))), UsageError);
  CHECK_NOTHROW(ad::sum(a).backward());
  CHECK_THROWS_AS(a.backward(), UsageError);
}
