#include "helpers.hpp"

#include "ktgnn/errors.hpp"
#include "ktgnn/metrics.hpp"
#include "ktgnn/optim.hpp"

#include <doctest.h>

using namespace ktgnn;
using namespace ktgnn::testing;
namespace ad = ktgnn::ad;

namespace {

double pairwise_auc(const std::vector<int>& y, const std::vector<double>& s) {
  double num = 0;
  long pairs = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        ++pairs;
      }
  return num / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("AUC equals the pairwise count including ties") {
  std::mt19937_64 r(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + r() % 60;
    std::vector<int> y(n);
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = static_cast<int>(r() % 2);
      s[k] = static_cast<double>(r() % 7) / 7.0;
    }
    y[0] = 0;
    y[1] = 1;
    CHECK(compute_auc(y, s) == pairwise_auc(y, s));
  }
  const std::vector<int> y = {0, 0, 1, 1};
  CHECK(compute_auc(y, std::vector<double>{0.1, 0.4, 0.35, 0.8}) == 0.75);
  CHECK(compute_auc(y, std::vector<double>{0.5, 0.5, 0.5, 0.5}) == 0.5);
  CHECK_THROWS_AS(compute_auc(std::vector<int>{1, 1}, std::vector<double>{0.1, 0.2}), DataError);
}

TEST_CASE("F1 modes") {
  const std::vector<int> y = {1, 1, 1, 0, 0, 0, 0};
  const std::vector<double> s = {0.9, 0.5, 0.2, 0.7, 0.1, 0.3, 0.49};
  const Confusion c = confusion(y, s);
  CHECK(c.tp == 2);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 3);
  const double f_pos = 4.0 / 6.0, f_neg = 6.0 / 8.0;
  CHECK(compute_f1(y, s, F1Mode::Binary) == doctest::Approx(f_pos).epsilon(1e-15));
  CHECK(compute_f1(y, s, F1Mode::Macro) == doctest::Approx((f_pos + f_neg) / 2).epsilon(1e-15));
  CHECK(compute_f1(y, s, F1Mode::Micro) == doctest::Approx(5.0 / 7.0).epsilon(1e-15));
  // a class with no support and no predictions scores zero
  CHECK(compute_f1(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2}, F1Mode::Binary) == 0.0);
  CHECK(parse_f1_mode("binary") == F1Mode::Binary);
  CHECK(to_string(F1Mode::Macro) == "macro");
  CHECK_THROWS_AS(parse_f1_mode("weighted"), UsageError);
}

TEST_CASE("Adam matches a scalar oracle") {
  ad::Tensor x = ad::parameter((Mat(1, 2) << 1.0, -2.0).finished());
  ParamSet set;
  set.add("x", x);
  AdamConfig cfg{.learning_rate = 0.1, .weight_decay = 0.01};
  AdamState st;

  double w[2] = {1.0, -2.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    set.zero_grad();
    ad::sum(ad::mul(ad::mul(x, x), x)).backward();  // d/dx x^3 = 3x^2
    adam_step(set, st, cfg);
    for (int k = 0; k < 2; ++k) {
      const double g = 3 * w[k] * w[k] + cfg.weight_decay * w[k];
      m[k] = 0.9 * m[k] + 0.1 * g;
      v[k] = 0.999 * v[k] + 0.001 * g * g;
      const double mh = m[k] / (1 - std::pow(0.9, t));
      const double vh = v[k] / (1 - std::pow(0.999, t));
      w[k] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.eps);
      CHECK(x.value()(0, k) == doctest::Approx(w[k]).epsilon(1e-14));
    }
  }
  CHECK(st.step == 5);
}

TEST_CASE("Adam descends a quadratic") {
  std::mt19937_64 r(3);
  ad::Tensor x = ad::parameter(random_matrix(3, 3, r));
  ParamSet set;
  set.add("x", x);
  AdamState st;
  const double start = x.value().squaredNorm();
  for (int t = 0; t < 200; ++t) {
    set.zero_grad();
    ad::squared_norm(x).backward();
    adam_step(set, st, {.learning_rate = 0.05});
  }
  CHECK(x.value().squaredNorm() < 1e-2 * start);
}

TEST_CASE("parameter sets") {
  Rng rng(1);
  ParamSet set;
  set.add("a", ad::parameter(glorot_uniform(3, 4, rng)));
  set.add("b", ad::parameter(Mat::Zero(1, 4)));
  CHECK(set.num_scalars() == 16);
  CHECK(set.find("b").cols() == 4);
  CHECK_THROWS_AS(set.add("a", ad::parameter(Mat::Zero(1, 1))), UsageError);
  CHECK_THROWS_AS((void)set.find("c"), UsageError);

  const auto snap = set.snapshot();
  set.find("a").mutable_value().setConstant(3.0);
  set.restore(snap);
  CHECK(set.find("a").value() == snap[0]);
  const double bound = std::sqrt(6.0 / 7.0);
  CHECK(snap[0].cwiseAbs().maxCoeff() <= bound);
}
