#include "helpers.hpp"

#include "ktgnn/checkpoint.hpp"
#include "ktgnn/errors.hpp"
#include "ktgnn/io.hpp"
#include "ktgnn/stats.hpp"
#include "ktgnn/sweep.hpp"
#include "ktgnn/train.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace ktgnn;
using namespace ktgnn::testing;
namespace ad = ktgnn::ad;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("ktgnn_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string expect_data_error(const fs::path& manifest) {
  try {
    load_dataset(manifest);
  } catch (const DataError& e) {
    return e.what();
  }
  FAIL("expected DataError");
  return {};
}

}  // namespace

TEST_CASE("save then load is the identity") {
  TempDir dir("rt");
  const VSGraph g0 = split_dataset(random_graph({.nodes = 40, .edge_prob = 0.1, .label_prob = 0.7}, 1), 2);
  const VSGraph g = round_features(g0);
  const fs::path m = save_dataset(g, dir.path, "rt", true);
  const VSGraph h = load_dataset(m);
  CHECK(h.csr_offsets() == g.csr_offsets());
  CHECK(h.csr_targets() == g.csr_targets());
  CHECK(h.population() == g.population());
  CHECK(h.x_obs() == g.x_obs());
  CHECK(h.x_unobs() == g.x_unobs());
  CHECK(h.unobs_valid() == g.unobs_valid());
  CHECK(h.labels() == g.labels());
  CHECK(h.split() == g.split());
  // rounding to 9 digits is idempotent
  CHECK(round_features(h).x_obs() == h.x_obs());
  CHECK((g0.x_obs() - g.x_obs()).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + g0.x_obs().cwiseAbs().maxCoeff()));
}

TEST_CASE("decimal formatting") {
  CHECK(format_decimal(0.5) == "0.5");
  CHECK(format_decimal(1.0 / 3.0) == "0.333333333");
  CHECK(parse_decimal("2.5e-3") == 2.5e-3);
  CHECK(parse_decimal("+1") == 1.0);
  CHECK_FALSE(parse_decimal("1,5").has_value());
  CHECK_FALSE(parse_decimal("abc").has_value());
  CHECK_FALSE(parse_decimal("").has_value());
}

TEST_CASE("large manifest loads") {
  TempDir dir("large");
  GraphInput in;
  in.num_nodes = 10641;
  in.d_unobs = 78;
  std::mt19937_64 r(3);
  for (Index i = 0; i < in.num_nodes; ++i) in.population.push_back(i < 3987 ? Population::Vocal : Population::Silent);
  in.x_obs = random_matrix(in.num_nodes, 33, r);
  for (Index i = 0; i < 3987; ++i) in.x_unobs_vocal.ids.push_back(i);
  in.x_unobs_vocal.values = random_matrix(3987, 78, r);
  in.labels.assign(in.num_nodes, kNoLabel);
  std::set<std::pair<Index, Index>> seen;
  while (seen.size() < 116785) {
    Index a = static_cast<Index>(r() % in.num_nodes), b = static_cast<Index>(r() % in.num_nodes);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.emplace(a, b).second) in.edges.emplace_back(a, b);
  }
  const VSGraph g = build_graph(in);
  const VSGraph h = load_dataset(save_dataset(g, dir.path, "large"));
  CHECK(h.num_nodes() == 10641);
  CHECK(h.vocal_ids().size() == 3987);
  CHECK(h.num_undirected_edges() == 116785);
  CHECK(h.d_obs() == 33);
  CHECK(h.d_unobs() == 78);
}

TEST_CASE("malformed inputs report file and line") {
  TempDir dir("bad");
  const VSGraph g = random_graph({.nodes = 6, .edge_prob = 0.5, .d_obs = 2, .d_unobs = 2}, 4);
  const fs::path m = save_dataset(g, dir.path, "bad");

  SUBCASE("non-numeric edge endpoint") {
    write_file(dir.path / "edges.tsv", "src\tdst\n0\t1\na\t3\n");
    const std::string msg = expect_data_error(m);
    CHECK(msg.find("edges.tsv:3") != std::string::npos);
  }
  SUBCASE("declared width does not match the file") {
    nlohmann::json j = read_manifest(m).to_json();
    j["d_obs"] = 33;
    j["d_unobs"] = 78;
    write_file(m, j.dump());
    CHECK_THROWS_AS(load_dataset(m), DataError);
  }
  SUBCASE("non-numeric feature") {
    std::ostringstream os;
    os << "node_id\to0\to1\n";
    for (Index i = 0; i < 6; ++i) os << i << '\t' << (i == 2 ? "x" : "1") << "\t0\n";
    write_file(dir.path / "features_obs.tsv", os.str());
    CHECK(expect_data_error(m).find("features_obs.tsv:4") != std::string::npos);
  }
  SUBCASE("unknown node id") {
    write_file(dir.path / "edges.tsv", "src\tdst\n0\t99\n");
    CHECK_THROWS_AS(load_dataset(m), DataError);
  }
  SUBCASE("vocal node missing its unobservable row") {
    write_file(dir.path / "features_unobs_vocal.tsv", "node_id\tu0\tu1\n");
    CHECK_THROWS_AS(load_dataset(m), DataError);
  }
  SUBCASE("bad format version") {
    nlohmann::json j = read_manifest(m).to_json();
    j["format_version"] = 9;
    write_file(m, j.dump());
    CHECK_THROWS_AS(load_dataset(m), DataError);
  }
  SUBCASE("missing manifest") {
    CHECK_THROWS_AS(load_dataset(dir.path / "nope.json"), DataError);
  }
}

TEST_CASE("node ids are arbitrary tokens") {
  TempDir dir("tok");
  write_file(dir.path / "population.tsv", "node_id\tpopulation\nalice\tvocal\nbob\tsilent\ncarol\t1\n");
  write_file(dir.path / "edges.tsv", "src\tdst\ncarol\talice\nbob\talice\nalice\tbob\n");
  write_file(dir.path / "features_obs.tsv", "node_id\to0\ncarol\t3\nalice\t1\nbob\t2\n");
  write_file(dir.path / "features_unobs_vocal.tsv", "node_id\tu0\nalice\t7\n");
  write_file(dir.path / "labels.tsv", "node_id\tlabel\nalice\t1\nbob\t-1\ncarol\t0\n");
  DatasetManifest man;
  man.name = "tok";
  man.num_nodes = 3;
  man.d_obs = 1;
  man.d_unobs = 1;
  write_file(dir.path / "manifest.json", man.to_json().dump());
  const VSGraph g = load_dataset(dir.path / "manifest.json");
  CHECK(g.x_obs()(2, 0) == 3.0);
  CHECK(g.x_unobs()(0, 0) == 7.0);
  CHECK(g.num_undirected_edges() == 2);
  CHECK(g.labels() == std::vector<int>{1, kNoLabel, 0});
}

TEST_CASE("quartiles match a sort-and-index oracle") {
  CHECK(quantile_sorted({1, 2, 3, 4}, 0.25) == 1.75);
  CHECK(quantile_sorted({5}, 0.75) == 5.0);
  std::mt19937_64 r(9);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> v(1 + r() % 40);
    for (double& x : v) x = std::normal_distribution<double>()(r);
    std::sort(v.begin(), v.end());
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const double pos = q * static_cast<double>(v.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const std::size_t hi = std::min(lo + 1, v.size() - 1);
      CHECK(quantile_sorted(v, q) == doctest::Approx(v[lo] + (pos - lo) * (v[hi] - v[lo])).epsilon(1e-14));
    }
  }
}

TEST_CASE("feature summaries") {
  GraphInput in = random_graph({.nodes = 50, .edge_prob = 0.05, .d_obs = 2}, 6).to_input();
  in.x_obs.col(1).setConstant(4.0);
  in.split.clear();
  const VSGraph g = build_graph(in);
  const auto rows = feature_summaries(g);
  Index total = 0;
  for (const auto& s : rows) {
    if (s.feature == 1) {
      CHECK(s.q1 == 4.0);
      CHECK(s.median == 4.0);
      CHECK(s.q3 == 4.0);
      CHECK(s.mean == 4.0);
      CHECK(s.std == 0.0);
    } else {
      total += s.count;
      double sum = 0, ss = 0;
      for (Index i = 0; i < g.num_nodes(); ++i)
        if (g.population(i) == s.population && g.labels()[i] == s.label) sum += g.x_obs()(i, 0);
      const double mean = sum / static_cast<double>(s.count);
      for (Index i = 0; i < g.num_nodes(); ++i)
        if (g.population(i) == s.population && g.labels()[i] == s.label) ss += std::pow(g.x_obs()(i, 0) - mean, 2);
      CHECK(s.mean == doctest::Approx(mean).epsilon(1e-13));
      CHECK(s.std == doctest::Approx(std::sqrt(ss / static_cast<double>(s.count))).epsilon(1e-12));
      CHECK(s.min <= s.q1);
      CHECK(s.q3 <= s.max);
    }
  }
  CHECK(total == 50);

  std::ostringstream os;
  write_summaries_csv(os, rows);
  CHECK(os.str().rfind("feature,population,label,count,min,q1,median,q3,max,mean,std\n", 0) == 0);
}

TEST_CASE("PCA projection") {
  std::mt19937_64 r(2);
  Mat x = random_matrix(100, 4, r);
  x.col(0) *= 5.0;
  x.col(1) += 0.5 * x.col(0);
  const Mat p = pca_2d(x);
  REQUIRE(p.cols() == 2);
  CHECK(std::abs(p.col(0).mean()) < 1e-12);
  CHECK(std::abs(p.col(1).mean()) < 1e-12);
  CHECK(p.col(0).squaredNorm() >= p.col(1).squaredNorm());
  CHECK(std::abs(p.col(0).dot(p.col(1))) < 1e-8);
  // total variance of the projection is at most that of the data
  const Mat c = x.rowwise() - x.colwise().mean();
  CHECK(p.squaredNorm() <= c.squaredNorm() + 1e-9);
  CHECK(pca_2d(x) == p);
  CHECK(pca_2d(Mat::Ones(5, 3)).isZero());
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("ck");
  Rng rng(1);
  ParamSet a;
  a.add("w", ad::parameter(glorot_uniform(3, 4, rng)));
  a.add("b", ad::parameter(glorot_uniform(1, 4, rng)));
  const nlohmann::json cfg = {{"hidden_dim", 4}};
  save_checkpoint(dir.path / "m.ckpt", a, cfg);

  const Checkpoint ck = read_checkpoint(dir.path / "m.ckpt");
  CHECK(ck.config == cfg);
  ParamSet b;
  b.add("w", ad::parameter(Mat::Zero(3, 4)));
  b.add("b", ad::parameter(Mat::Zero(1, 4)));
  load_into(ck, b);
  CHECK(b.snapshot() == a.snapshot());

  ParamSet wrong;
  wrong.add("w", ad::parameter(Mat::Zero(4, 3)));
  wrong.add("b", ad::parameter(Mat::Zero(1, 4)));
  CHECK_THROWS_AS(load_into(ck, wrong), DataError);
  ParamSet fewer;
  fewer.add("w", ad::parameter(Mat::Zero(3, 4)));
  CHECK_THROWS_AS(load_into(ck, fewer), DataError);

  write_file(dir.path / "junk.ckpt", "NOTACKPT");
  CHECK_THROWS_AS(read_checkpoint(dir.path / "junk.ckpt"), DataError);
}

TEST_CASE("grid expansion") {
  const auto cells = expand_grid({{"lambda", {0.0, 0.5}}, {"K", {1, 2, 3}}});
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].label() == "K=1;lambda=0.0");
  CHECK(cells[1].label() == "K=1;lambda=0.5");
  CHECK(cells[5].label() == "K=3;lambda=0.5");
  CHECK(expand_grid({{"model", {"gcn"}}})[0].label() == "model=gcn");
  CHECK_THROWS_AS(expand_grid(nlohmann::json::object()), UsageError);
  CHECK_THROWS_AS(expand_grid({{"K", nlohmann::json::array()}}), UsageError);
  CHECK_THROWS_AS(expand_grid({{"K", 2}}), UsageError);
  CHECK_THROWS_AS(expand_grid({{"K", {0}}}), UsageError);
  CHECK_THROWS_AS(expand_grid({{"nope", {1}}}), UsageError);
}

TEST_CASE("aggregation statistics") {
  const MeanStd m = mean_std({1.0, 2.0, 4.0});
  CHECK(m.mean == doctest::Approx(7.0 / 3.0));
  CHECK(m.std == doctest::Approx(std::sqrt(((16.0 + 1.0 + 25.0) / 9.0) / 2.0)));
  CHECK(mean_std({3.0}).std == 0.0);
  CHECK(std::isnan(mean_std({}).mean));

  std::vector<RunOutcome> runs = {{0, 1, 3, 0.5, 0.6, 0.7, 0.8}, {1, 1, 2, 0.1, 0.2, 0.3, 0.4},
                                  {0, 2, 4, 0.7, 0.8, 0.9, 1.0}};
  const auto agg = aggregate(runs, 2);
  CHECK(agg[0].runs == 2);
  CHECK(agg[0].test_auc.mean == doctest::Approx(0.9));
  CHECK(agg[1].runs == 1);
  CHECK(agg[1].val_f1.mean == 0.1);
}
