// ktgnn command line: generate, stats, complete, train, eval, sweep.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include "ktgnn/checkpoint.hpp"
#include "ktgnn/errors.hpp"
#include "ktgnn/io.hpp"
#include "ktgnn/stats.hpp"
#include "ktgnn/sweep.hpp"
#include "ktgnn/synth.hpp"
#include "ktgnn/train.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ktgnn;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(p.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

// "key=value"; the value is parsed as JSON when possible, else kept as a string.
std::pair<std::string, json> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + s + "'");
  const std::string value = s.substr(eq + 1);
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  return {s.substr(0, eq), v};
}

struct TrainFlags {
  std::string config;
  std::optional<std::string> model, completion, f1_mode;
  std::optional<int> K, epochs, hidden, layers;
  std::optional<double> lambda, gamma, lr, weight_decay, drop, dropout;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> ablate;
  std::vector<std::string> set;
  bool silent_only = false;
  bool file_split = false;
  bool raw_scores = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "training config JSON");
    app->add_option("--model", model, "ktgnn | gcn | mlp");
    app->add_option("--completion", completion, "baseline completion: none | zero | mean");
    app->add_option("--K", K, "feature completion iterations");
    app->add_option("--lambda", lambda, "weight of the KL loss");
    app->add_option("--gamma", gamma, "weight of the distribution loss");
    app->add_option("--seed", seed, "seed for splits, init and dropout");
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--hidden", hidden, "hidden width");
    app->add_option("--layers", layers, "message passing layers");
    app->add_option("--dropout", dropout);
    app->add_option("--ablate", ablate, "no_dafc, no_damp, no_dtc, no_dist_loss, no_kl_loss")->delimiter(',');
    app->add_option("--drop-cross-edges", drop, "fraction of vocal-silent edges to remove");
    app->add_option("--f1", f1_mode, "macro | binary | micro");
    app->add_flag("--silent-only", silent_only, "train on the silent subgraph only");
    app->add_flag("--file-split", file_split, "keep the split stored with the dataset");
    app->add_flag("--raw-scores", raw_scores, "skip attention normalization");
    app->add_option("--set", set, "any config key, as key=value");
  }

  [[nodiscard]] TrainConfig resolve() const {
    TrainConfig c;
    if (!config.empty()) c = train_config_from_json(read_json_file(config));
    if (model) c.model = parse_model(*model);
    if (completion) c.completion = parse_completion(*completion);
    if (f1_mode) c.f1_mode = parse_f1_mode(*f1_mode);
    if (K) c.K = *K;
    if (epochs) c.epochs = *epochs;
    if (hidden) c.hidden_dim = *hidden;
    if (layers) c.num_layers = *layers;
    if (lambda) c.lambda = *lambda;
    if (gamma) c.gamma = *gamma;
    if (lr) c.learning_rate = *lr;
    if (weight_decay) c.weight_decay = *weight_decay;
    if (drop) c.cross_edge_drop = *drop;
    if (dropout) c.dropout = *dropout;
    if (seed) c.seed = *seed;
    for (const auto& a : ablate) c.ablate.set(a);
    if (silent_only) c.silent_only = true;
    if (file_split) c.use_file_split = true;
    if (raw_scores) c.raw_scores = true;
    for (const auto& s : set) {
      auto [k, v] = parse_assignment(s);
      apply_override(c, k, v);
    }
    c.validate();
    return c;
  }
};

void write_predictions(const fs::path& p, const VSGraph& g, const std::vector<double>& scores) {
  auto out = open_out(p);
  out << "node_id\tsplit\tlabel\tscore\tprediction\n";
  for (Index i : g.silent_ids())
    out << i << '\t' << to_string(g.split()[i]) << '\t' << g.labels()[i] << '\t' << format_number(scores[i]) << '\t'
        << (scores[i] >= 0.5 ? 1 : 0) << '\n';
}

json eval_json(const EpochRecord& r) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  const auto& val = r.metrics[static_cast<int>(Head::Generated)][1];
  const auto& test = r.metrics[static_cast<int>(Head::Generated)][2];
  return {{"test", {{"f1", num(test.f1)}, {"auc", num(test.auc)}}},
          {"val", {{"f1", num(val.f1)}, {"auc", num(val.auc)}}}};
}

int cmd_generate(const std::string& config, std::optional<std::uint64_t> seed, const std::string& name,
                 const fs::path& out) {
  SynthConfig cfg = config.empty() ? SynthConfig{} : synth_config_from_json(read_json_file(config));
  if (seed) cfg.seed = *seed;
  const VSGraph g = generate_synthetic(cfg);
  const fs::path manifest = save_dataset(g, out, name);
  write_json(out / "synth_config.json", to_json(cfg));
  std::cout << "wrote " << manifest.string() << " (" << g.num_nodes() << " nodes, " << g.num_undirected_edges()
            << " edges)\n";
  return kOk;
}

int cmd_stats(const fs::path& data, const fs::path& out) {
  const VSGraph g = load_dataset(data);
  fs::create_directories(out);
  {
    auto os = open_out(out / "feature_stats.csv");
    write_summaries_csv(os, feature_summaries(g));
  }
  {
    auto os = open_out(out / "pca.csv");
    write_projection_csv(os, g, pca_2d(g.x_obs()));
  }
  std::cout << "wrote feature_stats.csv and pca.csv to " << out.string() << '\n';
  return kOk;
}

int cmd_complete(const fs::path& data, const TrainFlags& flags, const std::string& ckpt, const fs::path& out) {
  TrainConfig cfg = flags.resolve();
  if (!ckpt.empty()) {
    const Checkpoint ck = read_checkpoint(ckpt);
    cfg = train_config_from_json(ck.config);
  }
  if (cfg.model != ModelKind::KTGNN) throw UsageError("complete needs a ktgnn configuration");
  const VSGraph g = prepare_graph(load_dataset(data), cfg);
  KTGNNModel model(g, cfg, derive_seed(cfg.seed, 2));
  if (!ckpt.empty()) load_into(read_checkpoint(ckpt), model.params());

  ad::NoGradGuard guard;
  const CompletionResult r = model.complete();
  fs::create_directories(out);
  auto os = open_out(out / "completed_unobs.tsv");
  os << "node_id\tpopulation\tcompleted_at_iter";
  for (Index c = 0; c < g.d_unobs(); ++c) os << "\tu" << c;
  os << '\n';
  const Mat& x = r.x_unobs_completed.value();
  for (Index i = 0; i < g.num_nodes(); ++i) {
    os << i << '\t' << (g.is_vocal(i) ? "vocal" : "silent") << '\t' << r.completed_at_iter[i];
    for (Index c = 0; c < x.cols(); ++c) os << '\t' << format_decimal(x(i, c));
    os << '\n';
  }
  std::cout << "wrote completed_unobs.tsv to " << out.string() << '\n';
  return kOk;
}

int cmd_train(const fs::path& data, const TrainFlags& flags, const fs::path& out) {
  const TrainConfig cfg = flags.resolve();
  const VSGraph g = load_dataset(data);
  Experiment e = run_experiment(g, cfg);
  fs::create_directories(out);
  {
    auto os = open_out(out / "metrics.csv");
    write_metrics_csv(os, e.result.history);
  }
  write_json(out / "summary.json", summary_json(cfg, e.result));
  write_json(out / "config.json", to_json(cfg));
  write_predictions(out / "predictions.tsv", e.graph, e.result.best_scores);
  save_checkpoint(out / "model.ckpt", e.model->params(), to_json(cfg));
  if (e.result.vocal_train_empty) std::cerr << "warning: no labeled vocal nodes in the training split\n";
  const auto& t = e.result.best.metrics[static_cast<int>(Head::Generated)][2];
  std::cout << "best epoch " << e.result.best_epoch << "  test f1 " << format_number(t.f1) << "  test auc "
            << format_number(t.auc) << '\n';
  return kOk;
}

int cmd_eval(const fs::path& data, const fs::path& ckpt_path, const fs::path& out) {
  const Checkpoint ck = read_checkpoint(ckpt_path);
  const TrainConfig cfg = train_config_from_json(ck.config);
  const VSGraph g = prepare_graph(load_dataset(data), cfg);
  auto model = make_model(g, cfg, derive_seed(cfg.seed, 2));
  load_into(ck, model->params());
  const EpochRecord r = evaluate_model(*model, cfg);
  fs::create_directories(out);
  write_json(out / "eval.json", eval_json(r));
  {
    ad::NoGradGuard guard;
    write_predictions(out / "predictions.tsv", g, model->forward(false, 0).scores.generated);
  }
  const auto& t = r.metrics[static_cast<int>(Head::Generated)][2];
  std::cout << "test f1 " << format_number(t.f1) << "  test auc " << format_number(t.auc) << '\n';
  return kOk;
}

int cmd_sweep(const fs::path& data, const TrainFlags& flags, const fs::path& grid_path, int seeds, int jobs,
              const fs::path& out) {
  if (seeds < 1) throw UsageError("--seeds must be >= 1");
  if (jobs < 1) throw UsageError("--jobs must be >= 1");
  const TrainConfig base = flags.resolve();
  const std::vector<GridCell> cells = expand_grid(read_json_file(grid_path));
  const VSGraph g = load_dataset(data);

  struct Task {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (int s = 0; s < seeds; ++s) tasks.push_back({c, base.seed + static_cast<std::uint64_t>(s)});

  std::vector<RunOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        TrainConfig cfg = base;
        for (const auto& [key, v] : cells[tasks[k].cell].values) apply_override(cfg, key, v);
        cfg.seed = tasks[k].seed;
        cfg.validate();
        const Experiment e = run_experiment(g, cfg);
        const auto& m = e.result.best.metrics[static_cast<int>(Head::Generated)];
        outcomes[k] = {tasks[k].cell, cfg.seed, e.result.best_epoch, m[1].f1, m[1].auc, m[2].f1, m[2].auc};
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!first_error) first_error = std::current_exception();
        next = tasks.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min<int>(jobs, static_cast<int>(tasks.size())); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  fs::create_directories(out);
  {
    auto os = open_out(out / "runs.csv");
    os << "cell,params,seed,best_epoch,val_f1,val_auc,test_f1,test_auc\n";
    for (const auto& r : outcomes)
      os << r.cell << ",\"" << cells[r.cell].label() << "\"," << r.seed << ',' << r.best_epoch << ','
         << format_number(r.val_f1) << ',' << format_number(r.val_auc) << ',' << format_number(r.test_f1) << ','
         << format_number(r.test_auc) << '\n';
  }
  {
    auto os = open_out(out / "aggregate.csv");
    os << "cell,params,runs,test_auc_mean,test_auc_std,test_f1_mean,test_f1_std,val_auc_mean,val_auc_std,val_f1_mean,"
          "val_f1_std\n";
    for (const auto& s : aggregate(outcomes, cells.size())) {
      os << s.cell << ",\"" << cells[s.cell].label() << "\"," << s.runs;
      for (const MeanStd& m : {s.test_auc, s.test_f1, s.val_auc, s.val_f1})
        os << ',' << format_number(m.mean) << ',' << format_number(m.std);
      os << '\n';
    }
  }
  write_json(out / "config.json", {{"base", to_json(base)}, {"grid", read_json_file(grid_path)}, {"seeds", seeds}});
  std::cout << "ran " << tasks.size() << " runs over " << cells.size() << " cells\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-transferable GNN for silent node classification on vocal/silent graphs"};
  app.require_subcommand(1);

  std::string data, out, config, name = "synthetic", ckpt, grid;
  std::optional<std::uint64_t> gen_seed;
  int seeds = 5;
  int jobs = 1;
  TrainFlags train_flags, complete_flags, sweep_flags;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  gen->add_option("--config", config, "synthetic config JSON (defaults when omitted)");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--name", name);
  gen->add_option("--out", out)->required();

  auto* stats = app.add_subcommand("stats", "per-feature summaries and a PCA projection");
  stats->add_option("--data", data, "manifest.json")->required();
  stats->add_option("--out", out)->required();

  auto* complete = app.add_subcommand("complete", "run feature completion only");
  complete->add_option("--data", data, "manifest.json")->required();
  complete->add_option("--checkpoint", ckpt, "use trained parameters");
  complete->add_option("--out", out)->required();
  complete_flags.attach(complete);

  auto* train = app.add_subcommand("train", "train and evaluate one model");
  train->add_option("--data", data, "manifest.json")->required();
  train->add_option("--out", out)->required();
  train_flags.attach(train);

  auto* eval = app.add_subcommand("eval", "evaluate a saved model");
  eval->add_option("--data", data, "manifest.json")->required();
  eval->add_option("--checkpoint", ckpt, "model.ckpt written by train")->required();
  eval->add_option("--out", out)->required();

  auto* sweep = app.add_subcommand("sweep", "grid x seeds, aggregated");
  sweep->add_option("--data", data, "manifest.json")->required();
  sweep->add_option("--grid", grid, "JSON object of key -> list of values")->required();
  sweep->add_option("--seeds", seeds, "runs per grid cell");
  sweep->add_option("--jobs", jobs, "concurrent runs");
  sweep->add_option("--out", out)->required();
  sweep_flags.attach(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(config, gen_seed, name, out);
    if (*stats) return cmd_stats(data, out);
    if (*complete) return cmd_complete(data, complete_flags, ckpt, out);
    if (*train) return cmd_train(data, train_flags, out);
    if (*eval) return cmd_eval(data, ckpt, out);
    if (*sweep) return cmd_sweep(data, sweep_flags, grid, seeds, jobs, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
