#include "helpers.hpp"

#include "ktgnn/damp.hpp"
#include "ktgnn/errors.hpp"

#include <doctest.h>

using namespace ktgnn;
using namespace ktgnn::testing;
namespace ad = ktgnn::ad;

namespace {

double lrelu(double x) { return x > 0 ? x : ad::kLeakySlope * x; }
Mat lrelu(const Mat& m) { return m.unaryExpr([](double x) { return lrelu(x); }); }

// Edge-by-edge layer from the definition.
Mat layer_oracle(const VSGraph& g, const Mat& h, const DAMPLayerParams& p) {
  const Index n = g.num_nodes();
  const Index d_in = p.d_in(), d_out = p.d_out();
  RowVec mv = RowVec::Zero(d_in), ms = RowVec::Zero(d_in);
  for (Index v : g.vocal_ids()) mv += h.row(v);
  for (Index s : g.silent_ids()) ms += h.row(s);
  mv /= static_cast<double>(g.vocal_ids().size());
  ms /= static_cast<double>(g.silent_ids().size());
  const RowVec diff = mv - ms;

  Mat out(n, d_out);
  for (Index j = 0; j < n; ++j) {
    const int pj = static_cast<int>(g.population(j));
    const Mat& w = p.w_pop[pj].value();
    const Mat& a = p.a_pop[pj].value();
    const RowVec hj = h.row(j) * w;
    std::vector<RowVec> msg;
    std::vector<double> score;
    for (Index i : g.neighbors(j)) {
      RowVec hi = h.row(i);
      if (g.population(i) != g.population(j)) {
        const Mat& as = p.a_shift[static_cast<int>(g.population(i))].value();
        double z = 0;
        for (Index c = 0; c < d_in; ++c) z += h(i, c) * as(c, 0) + diff[c] * as(d_in + c, 0);
        const double sign = g.is_vocal(j) ? 1.0 : -1.0;
        hi += sign * std::tanh(z) * diff;
      }
      const RowVec m = hi * w;
      double s = 0;
      for (Index c = 0; c < d_out; ++c) s += lrelu(m[c]) * a(c, 0) + lrelu(hj[c]) * a(d_out + c, 0);
      msg.push_back(m);
      score.push_back(s);
    }
    RowVec acc = hj;
    if (!msg.empty()) {
      const double mx = *std::max_element(score.begin(), score.end());
      double z = 0;
      for (double s : score) z += std::exp(s - mx);
      for (std::size_t k = 0; k < msg.size(); ++k) acc += std::exp(score[k] - mx) / z * msg[k];
    }
    out.row(j) = acc;
  }
  return lrelu(out);
}

VSGraph one_population(const VSGraph& g, Population p) {
  GraphInput in = g.to_input();
  in.population.assign(in.num_nodes, p);
  if (p == Population::Silent) {
    in.x_unobs_vocal.ids.clear();
    in.x_unobs_vocal.values.resize(0, in.d_unobs);
  } else {
    in.x_unobs_vocal.ids.resize(in.num_nodes);
    for (Index i = 0; i < in.num_nodes; ++i) in.x_unobs_vocal.ids[i] = i;
    in.x_unobs_vocal.values = Mat::Zero(in.num_nodes, in.d_unobs);
  }
  in.split.clear();
  return build_graph(std::move(in));
}

}  // namespace

TEST_CASE("distribution shift is zero within a population and signed across") {
  Rng rng(1);
  const DAMPLayerParams p = DAMPLayerParams::init(3, 2, rng);
  std::mt19937_64 r(5);
  const Mat h = random_matrix(1, 3, r);
  const LayerMeans m{ad::constant(random_matrix(1, 3, r)), ad::constant(random_matrix(1, 3, r))};
  const RowVec diff = m.vocal.value() - m.silent.value();

  CHECK(distribution_shift(ad::constant(h), m, Population::Vocal, Population::Vocal, p).value().isZero());
  CHECK(distribution_shift(ad::constant(h), m, Population::Silent, Population::Silent, p).value().isZero());

  for (auto [src, dst] : {std::pair{Population::Silent, Population::Vocal}, std::pair{Population::Vocal, Population::Silent}}) {
    const Mat& as = p.a_shift[static_cast<int>(src)].value();
    double z = 0;
    for (Index c = 0; c < 3; ++c) z += h(0, c) * as(c, 0) + diff[c] * as(3 + c, 0);
    const RowVec want = shift_sign(dst) * std::tanh(z) * diff;
    const Mat got = distribution_shift(ad::constant(h), m, src, dst, p).value();
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(shift_sign(Population::Vocal) == 1.0);
  CHECK(shift_sign(Population::Silent) == -1.0);
}

TEST_CASE("layer matches the edge-by-edge oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const VSGraph g = random_graph({.nodes = 30, .edge_prob = 0.15, .vocal_fraction = 0.3}, seed + 100);
    Rng rng(seed);
    const DAMPLayerParams p = DAMPLayerParams::init(4, 3, rng);
    std::mt19937_64 r(seed);
    const Mat h = random_matrix(g.num_nodes(), 4, r);
    const Mat got = damp_layer_forward(g, plan_messages(g), ad::constant(h), p).value();
    CHECK((got - layer_oracle(g, h, p)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("message plan groups edges by target population") {
  const VSGraph g = random_graph({.nodes = 25, .edge_prob = 0.2}, 3);
  const MessagePlan plan = plan_messages(g);
  REQUIRE(plan.groups.size() == 2);
  Index total = 0, cross = 0;
  for (std::size_t gi = 0; gi < 2; ++gi) {
    const auto& grp = plan.groups[gi];
    CHECK(std::is_sorted(grp.dst.begin(), grp.dst.end()));
    for (Index j : grp.dst) CHECK(static_cast<std::size_t>(g.population(j)) == gi);
    for (std::size_t k = 0; k < grp.cross_pos.size(); ++k) {
      const Index e = grp.cross_pos[k];
      CHECK(g.population(grp.src[e]) != g.population(grp.dst[e]));
      CHECK(grp.cross_src[k] == grp.src[e]);
    }
    total += static_cast<Index>(grp.src.size());
    cross += static_cast<Index>(grp.cross_pos.size());
  }
  CHECK(total == g.num_directed_edges());
  CHECK(cross == 2 * count_cross_domain_edges(g));

  const MessagePlan shared = plan_messages(g, false);
  REQUIRE(shared.groups.size() == 1);
  CHECK(shared.groups[0].cross_pos.empty());
  CHECK(shared.groups[0].self_mask.sum() == static_cast<double>(g.num_nodes()));
}

TEST_CASE("one population: output ignores the shift attention") {
  const VSGraph mixed = random_graph({.nodes = 40, .edge_prob = 0.1}, 9);
  for (Population pop : {Population::Vocal, Population::Silent}) {
    const VSGraph g = one_population(mixed, pop);
    Rng rng(3);
    DAMPLayerParams p = DAMPLayerParams::init(4, 4, rng);
    std::mt19937_64 r(2);
    const ad::Tensor h = ad::constant(random_matrix(g.num_nodes(), 4, r));
    const MessagePlan plan = plan_messages(g);
    const Mat before = damp_layer_forward(g, plan, h, p).value();
    for (int trial = 0; trial < 5; ++trial) {
      for (auto& a : p.a_shift) a.mutable_value() = random_matrix(8, 1, r, 100.0);
      CHECK(damp_layer_forward(g, plan, h, p).value() == before);
    }
  }
}

TEST_CASE("without cross edges the shift attention has no effect") {
  const VSGraph g0 = random_graph({.nodes = 40, .edge_prob = 0.1}, 19);
  const VSGraph g = drop_cross_domain_edges(g0, 1.0, 0);
  REQUIRE(count_cross_domain_edges(g) == 0);
  Rng rng(3);
  DAMPLayerParams p = DAMPLayerParams::init(3, 3, rng);
  std::mt19937_64 r(2);
  const ad::Tensor h = ad::constant(random_matrix(g.num_nodes(), 3, r));
  const MessagePlan plan = plan_messages(g);
  const Mat before = damp_layer_forward(g, plan, h, p).value();
  p.a_shift[0].mutable_value().setConstant(7.0);
  p.a_shift[1].mutable_value().setConstant(-3.0);
  CHECK(damp_layer_forward(g, plan, h, p).value() == before);
}

TEST_CASE("relabeling nodes permutes the output") {
  const VSGraph g = random_graph({.nodes = 20, .edge_prob = 0.2}, 31);
  std::vector<Index> perm(g.num_nodes());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 r(4);
  std::shuffle(perm.begin(), perm.end(), r);

  GraphInput in = g.to_input();
  GraphInput out = in;
  for (Index i = 0; i < in.num_nodes; ++i) {
    out.population[perm[i]] = in.population[i];
    out.x_obs.row(perm[i]) = in.x_obs.row(i);
    out.labels[perm[i]] = in.labels[i];
  }
  for (auto& id : out.x_unobs_vocal.ids) id = perm[id];
  for (auto& [a, b] : out.edges) a = perm[a], b = perm[b];
  out.split.clear();
  const VSGraph gp = build_graph(std::move(out));

  Rng rng(5);
  const DAMPLayerParams p = DAMPLayerParams::init(3, 2, rng);
  const Mat h = random_matrix(g.num_nodes(), 3, r);
  Mat hp(h.rows(), h.cols());
  for (Index i = 0; i < g.num_nodes(); ++i) hp.row(perm[i]) = h.row(i);
  const Mat y = damp_layer_forward(g, plan_messages(g), ad::constant(h), p).value();
  const Mat yp = damp_layer_forward(gp, plan_messages(gp), ad::constant(hp), p).value();
  for (Index i = 0; i < g.num_nodes(); ++i) CHECK((y.row(i) - yp.row(perm[i])).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layer gradients match finite differences") {
  GraphInput in;
  in.num_nodes = 5;
  in.d_unobs = 1;
  in.population = {Population::Vocal, Population::Vocal, Population::Silent, Population::Silent, Population::Silent};
  in.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {1, 4}};
  std::mt19937_64 r(6);
  in.x_obs = random_matrix(5, 2, r);
  in.x_unobs_vocal = {{0, 1}, random_matrix(2, 1, r)};
  in.labels = {0, 1, 0, 1, 1};
  const VSGraph g = build_graph(in);

  Rng rng(7);
  const DAMPLayerParams p = DAMPLayerParams::init(3, 3, rng);
  for (auto& a : p.a_shift) const_cast<ad::Tensor&>(a).mutable_value() *= 10.0;
  ParamSet set;
  p.register_into(set, "l0.");
  ad::Tensor h = ad::parameter(random_matrix(5, 3, r));
  const MessagePlan plan = plan_messages(g);
  const ad::Tensor w = ad::constant(random_matrix(5, 3, r));
  std::vector<ad::Tensor> leaves = leaves_of(set);
  leaves.push_back(h);
  const GradCheck gc = grad_check(leaves, [&] { return ad::sum(ad::mul(damp_layer_forward(g, plan, h, p), w)); });
  CHECK(gc.max_rel_err < 1e-4);

  const GradCheck raw = grad_check(leaves, [&] {
    return ad::sum(ad::mul(damp_layer_forward(g, plan, h, p, {.raw_scores = true}), w));
  });
  CHECK(raw.max_rel_err < 1e-4);
}

TEST_CASE("layer input checks") {
  const VSGraph g = random_graph({.nodes = 10}, 1);
  Rng rng(1);
  const DAMPLayerParams p = DAMPLayerParams::init(3, 2, rng);
  CHECK_THROWS_AS(damp_layer_forward(g, plan_messages(g), ad::constant(Mat::Zero(9, 3)), p), UsageError);
  CHECK_THROWS_AS(damp_layer_forward(g, plan_messages(g), ad::constant(Mat::Zero(10, 2)), p), UsageError);
}
