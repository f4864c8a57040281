/*
 * Copyright 2026 The modgae Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// modgae command-line tool: split, train, eval, search, sbm, reproduce.

#include <glob.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modgae/modgae.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace modgae;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

json seed_set(std::uint64_t seed) {
  return {{"seed", seed},
          {"streams", {"split", "louvain", "sparsify", "init", "dropout", "sampling", "kmeans"}}};
}

/// One manifest per output directory. Paths are recorded as given so that
/// reruns with the same arguments write the same manifest.
void write_manifest(const fs::path& dir, const std::string& command, const json& config,
                    std::optional<std::uint64_t> fingerprint, const json& seeds,
                    const std::vector<std::string>& artifacts) {
  json m = {{"command", command},
            {"config", config},
            {"seeds", seeds},
            {"artifacts", artifacts},
            {"tool_version", std::string(kVersion)}};
  m["dataset_fingerprint"] = fingerprint ? json(hex(*fingerprint)) : json();
  write_json(dir / "manifest.json", m);
}

std::size_t default_jobs() {
  const char* v = std::getenv("MODGAE_JOBS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const unsigned long long n = std::strtoull(v, &end, 10);
  if (*end != '\0' || n == 0) throw UsageError(std::string("MODGAE_JOBS must be a positive integer, got ") + v);
  return static_cast<std::size_t>(n);
}

std::vector<fs::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<fs::path> out;
  if (rc == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  if (out.empty()) throw DataError("no run directory matches " + pattern);
  return out;
}

FeatureMatrix features_for(const std::string& path, std::span<const std::uint64_t> ids,
                           std::size_t n) {
  if (path.empty()) return FeatureMatrix::identity(n);
  if (!fs::exists(path)) throw DataError("features file " + path + " does not exist");
  return rows_by_original_id(load_features_csv(path), ids);
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string edges, out;
  std::uint64_t seed = 1;
};

void cmd_split(const SplitArgs& a) {
  const LoadedGraph lg = load_edge_list(a.edges);
  const EdgeSplit s = split_edges(lg.graph, derive_seed(a.seed, fnv1a64("split")));
  write_split(a.out, s, lg.original_ids);
  write_manifest(a.out, "split",
                 {{"edges", a.edges}, {"test_fraction", kTestFraction},
                  {"validation_fraction", kValidationFraction}},
                 fingerprint(lg.graph), seed_set(a.seed),
                 {"train.edges", "val_pos.csv", "val_neg.csv", "test_pos.csv", "test_neg.csv",
                  "node_map.csv"});
  std::cout << "n=" << lg.graph.n() << " m=" << lg.graph.m() << " train=" << s.train_graph.m()
            << " val=" << s.val_pos.size() << " test=" << s.test_pos.size() << '\n';
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string split, edges, features, config, preset, out;
  std::string model, encoder;
  std::size_t dim = 0, hidden = 0, s = 0, iters = 0, fastgae = 0;
  double lambda = 0, beta = 0, gamma = 0, lr = 0, dropout = 0, clip = 0;
  std::uint64_t seed = 0;
  // Flags the user actually passed, applied over config JSON and preset.
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> overrides;
};

TrainConfig resolve_config(const TrainArgs& a) {
  TrainConfig c;
  if (!a.preset.empty()) {
    auto p = table1_preset(a.preset);
    if (!p) throw UsageError("unknown preset " + a.preset);
    c = *p;
  }
  if (!a.config.empty()) {
    try {
      merge_json(read_json(a.config), c);
    } catch (const json::exception& e) {
      throw UsageError(a.config + ": " + e.what());
    }
  }
  for (const auto& [opt, apply] : a.overrides) {
    if (opt->count() > 0) apply(c);
  }
  return c;
}

void cmd_train(const TrainArgs& a) {
  if (a.split.empty() == a.edges.empty()) throw UsageError("give exactly one of --split or --edges");
  const TrainConfig cfg = resolve_config(a);

  Graph g;
  std::vector<std::uint64_t> ids;
  json inputs = {{"split", a.split.empty() ? json() : json(a.split)},
                 {"edges", a.edges.empty() ? json() : json(a.edges)},
                 {"features", a.features.empty() ? json() : json(a.features)}};
  if (!a.split.empty()) {
    LoadedSplit ls = read_split(a.split);
    g = std::move(ls.split.train_graph);
    ids = std::move(ls.original_ids);
  } else {
    LoadedGraph lg = load_edge_list(a.edges);
    g = std::move(lg.graph);
    ids = std::move(lg.original_ids);
  }
  const FeatureMatrix x = features_for(a.features, ids, g.n());

  const fs::path out = a.out;
  fs::create_directories(out);
  json config_json = cfg;
  write_json(out / "config.json", config_json);

  ModelRun run;
  try {
    run = run_model(g, x, cfg, true);
  } catch (const DivergenceError& e) {
    save_params(out / "params_last_finite", e.last_finite());
    throw;
  }
  write_telemetry(out / "telemetry.jsonl", run.trained.telemetry);
  write_embedding_csv(out / "embedding.csv", run.trained.embedding);
  save_params(out / "params", run.trained.params);
  write_partition(out / "louvain.csv", *run.prior_partition, ids);
  write_node_map(out / "node_map.csv", ids);
  write_edge_list(out / "graph.edges", g);

  json manifest_config = config_json;
  manifest_config["inputs"] = inputs;
  write_manifest(out, "train", manifest_config, fingerprint(g), seed_set(cfg.seed),
                 {"config.json", "telemetry.jsonl", "embedding.csv", "params/", "louvain.csv",
                  "node_map.csv", "graph.edges"});

  const auto& last = run.trained.telemetry.back();
  std::printf("iter %zu: total %.6f recon %.6f kl %.6f reg %.6f; prior communities %zu\n",
              last.iter, last.loss.total, last.loss.reconstruction, last.loss.kl,
              last.loss.regularizer, run.prior_partition->k());
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string run, runs, task = "cd", labels, partition, split, out;
  std::size_t k = 0;
  std::optional<std::uint64_t> seed;
};

struct RunDir {
  fs::path dir;
  json manifest;
  TrainConfig config;
  std::vector<std::uint64_t> ids;
  Graph graph;
};

RunDir load_run(const fs::path& dir) {
  RunDir r;
  r.dir = dir;
  r.manifest = read_json(dir / "manifest.json");
  r.config = read_json(dir / "config.json").get<TrainConfig>();
  r.ids = read_node_map(dir / "node_map.csv");
  r.graph = load_edge_list(dir / "graph.edges", {r.ids.size()}).graph;
  return r;
}

MetricsReport eval_run(const RunDir& run, const EvalArgs& a) {
  const Partition truth = read_partition(a.labels, run.ids);
  const std::size_t k = a.k > 0 ? a.k : truth.k();
  std::optional<Embedding> e;
  if (a.partition.empty() || a.task == "lpcd") {
    e = read_embedding_csv(run.dir / "embedding.csv");
    if (e->n() != run.graph.n()) throw DataError("embedding rows do not match the run's graph");
  }
  Partition found;
  if (!a.partition.empty()) {
    found = read_partition(a.partition, run.ids);
  } else {
    if (k == 0 || k > e->n()) throw UsageError("--k must lie in [1, n]");
    found = kmeans(e->z, k, a.seed ? *a.seed : kmeans_seed(run.config.seed)).partition;
  }
  MetricsReport r = evaluate_task1(run.graph, found, truth);
  if (a.task == "lpcd" && a.partition.empty()) {
    std::string split_dir = a.split;
    if (split_dir.empty()) {
      const auto& in = run.manifest.at("config").at("inputs").at("split");
      if (in.is_null()) throw UsageError("task lpcd needs a run trained on a split, or --split");
      split_dir = in.get<std::string>();
    }
    const LoadedSplit ls = read_split(split_dir);
    if (ls.original_ids != run.ids) throw DataError("split node map differs from the run's");
    std::vector<double> scores;
    std::vector<int> labels;
    pair_scores(*e, ls.split.test_pos, ls.split.test_neg, scores, labels);
    r.auc = auc(scores, labels);
    r.ap = average_precision(scores, labels);
  }
  return r;
}

fs::path metrics_path(const RunDir& run, const EvalArgs& a) {
  if (a.partition.empty()) return run.dir / "metrics.json";
  return run.dir / ("metrics_" + fs::path(a.partition).stem().string() + ".json");
}

void cmd_eval(const EvalArgs& a) {
  if (a.run.empty() == a.runs.empty()) throw UsageError("give exactly one of --run or --runs");
  if (!a.runs.empty()) {
    std::vector<MetricsReport> reports;
    json members = json::array();
    for (const auto& dir : expand_glob(a.runs)) {
      const RunDir run = load_run(dir);
      reports.push_back(eval_run(run, a));
      json j = to_json(reports.back());
      j["task"] = a.task;
      write_json(metrics_path(run, a), j);
      members.push_back(dir.string());
    }
    json agg = aggregate(reports);
    agg["task"] = a.task;
    agg["members"] = members;
    if (!a.out.empty()) write_json(a.out, agg);
    std::cout << agg.dump(2) << '\n';
    return;
  }
  const RunDir run = load_run(a.run);
  json j = to_json(eval_run(run, a));
  j["task"] = a.task;
  write_json(a.out.empty() ? metrics_path(run, a) : fs::path(a.out), j);
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
  std::string grid, split, features, labels, out;
  std::size_t k = 0, budget = 0, jobs = 1;
};

void cmd_search(const SearchArgs& a) {
  if (a.labels.empty() == (a.k == 0)) throw UsageError("give exactly one of --labels or --k");
  GridSpec grid;
  try {
    grid = grid_from_json(read_json(a.grid));
  } catch (const json::exception& e) {
    throw UsageError(a.grid + ": " + e.what());
  }
  const LoadedSplit ls = read_split(a.split);
  const std::size_t k = a.k > 0 ? a.k : read_partition(a.labels, ls.original_ids).k();
  const FeatureMatrix x = features_for(a.features, ls.original_ids, ls.split.train_graph.n());

  const GridResult r = grid_search(ValidationSplit::of(ls.split), x, k, grid, a.budget, a.jobs);
  fs::create_directories(a.out);
  write_grid_csv(fs::path(a.out) / "grid.csv", r);
  const GridPoint& best = r.best_point();
  if (best.failed) throw NumericError("every evaluated grid point diverged");
  json best_json = best.config;
  write_json(fs::path(a.out) / "best.json", best_json);
  write_manifest(a.out, "search",
                 {{"grid", a.grid}, {"split", a.split}, {"budget", a.budget}, {"k", k},
                  {"runs_per_point", grid.runs_per_point}, {"grid_size", grid.size()},
                  {"evaluated", r.points.size()}},
                 fingerprint(ls.split.train_graph), seed_set(grid.base.seed),
                 {"grid.csv", "best.json"});
  std::size_t failed = 0;
  for (const auto& p : r.points) failed += p.failed;
  std::printf("evaluated %zu of %zu points (%zu failed); best #%zu: criterion %.6f "
              "(val AUC %.4f, Q %.4f)\n",
              r.points.size(), grid.size(), failed, best.index, best.criterion,
              best.mean_val_auc, best.mean_modularity);
}

// ---------------------------------------------------------------------------
// sbm

struct SbmArgs {
  SbmConfig config{10, 100, 2e-2, 2e-4, 1};
  std::string out;
};

void cmd_sbm(const SbmArgs& a) {
  const Dataset d = generate_sbm(a.config);
  write_dataset_dir(a.out, d);
  const SbmConfig& c = a.config;
  write_manifest(a.out, "sbm",
                 {{"communities", c.communities}, {"size", c.community_size}, {"p_in", c.p_in},
                  {"p_out", c.p_out}},
                 fingerprint(d.graph), seed_set(c.seed),
                 {"graph.edges", "labels.csv", "node_map.csv"});
  std::cout << "n=" << d.graph.n() << " m=" << d.graph.m() << '\n';
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
  std::string experiment, out, data_dir = "data";
  std::size_t runs = 10, jobs = 1;
  std::uint64_t seed = 1;
};

json family_json(const std::vector<MetricsReport>& t1, const std::vector<MetricsReport>& t2,
                 const ReferenceRow& ref, bool has_lp) {
  auto runs = [](const std::vector<MetricsReport>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back(to_json(r));
    return a;
  };
  json reference = {{"task1", {{"ami", ref.task1_ami}, {"ari", ref.task1_ari}}},
                    {"task2", {{"ami", ref.task2_ami}, {"ari", ref.task2_ari}}}};
  if (has_lp) {
    reference["task2"]["auc"] = ref.task2_auc;
    reference["task2"]["ap"] = ref.task2_ap;
  }
  return {{"task1", {{"aggregate", aggregate(t1)}, {"runs", runs(t1)}}},
          {"task2", {{"aggregate", aggregate(t2)}, {"runs", runs(t2)}}},
          {"reference_percent", reference}};
}

std::string cell(const json& agg, const char* key, double ref) {
  char buf[64];
  if (!agg.contains(key)) return "--";
  std::snprintf(buf, sizeof buf, "%.2f ± %.2f (%.2f)", 100 * agg[key]["mean"].get<double>(),
                100 * agg[key]["std"].get<double>(), ref);
  return buf;
}

void cmd_reproduce(const ReproduceArgs& a) {
  const auto e = find_experiment(a.experiment);
  if (!e) throw UsageError("unknown experiment " + a.experiment);
  const Dataset data = e->dataset == "sbm"
                           ? generate_sbm(desk_sbm_config(a.seed))
                           : load_dataset(dataset_dir_paths(fs::path(a.data_dir) / e->dataset,
                                                            e->dataset, false));
  const TrainConfig cfg = experiment_config(*e);
  ProtocolOptions opt;
  opt.runs = a.runs;
  opt.seed = a.seed;
  opt.jobs = a.jobs;
  const ProtocolResult res = run_protocol(data, cfg, opt);

  json config_json = cfg;
  json report = {{"experiment", e->name},
                 {"dataset", {{"name", data.name},
                              {"n", data.graph.n()},
                              {"m", data.graph.m()},
                              {"classes", data.ground_truth->k()}}},
                 {"runs", a.runs},
                 {"seed", a.seed},
                 {"config", config_json},
                 {"model", e->model_label}};
  report["families"]["modularity_aware"] =
      family_json(res.ma_task1, res.ma_task2, e->modularity_aware, true);
  report["families"]["standard"] = family_json(res.standard_task1, res.standard_task2, e->standard, true);
  report["families"]["louvain"] = family_json(res.louvain_task1, res.louvain_task2, e->louvain, false);
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "report.json", report);
  json manifest_config = config_json;
  manifest_config["experiment"] = e->name;
  manifest_config["runs"] = a.runs;
  manifest_config["data_dir"] = e->dataset == "sbm" ? json() : json(a.data_dir);
  write_manifest(a.out, "reproduce", manifest_config, fingerprint(data.graph), seed_set(a.seed),
                 {"report.json"});

  std::printf("%s: n=%zu m=%zu classes=%zu, %zu run(s); mean ± std in %%, reference in parentheses\n",
              e->name.c_str(), data.graph.n(), data.graph.m(), data.ground_truth->k(), a.runs);
  std::printf("%-36s %-24s %-24s %-24s %-24s %-24s %-24s\n", "model", "task1 AMI", "task1 ARI",
              "task2 AMI", "task2 ARI", "task2 AUC", "task2 AP");
  const std::string standard_label = [&] {
    std::string s = e->model_label;
    const auto pos = s.find("Modularity-Aware");
    if (pos != std::string::npos) s.replace(pos, 16, "Standard");
    return s;
  }();
  auto row = [&](const std::string& label, const char* family, const ReferenceRow& ref) {
    const json& f = report["families"][family];
    const json& t1 = f["task1"]["aggregate"];
    const json& t2 = f["task2"]["aggregate"];
    std::printf("%-36s %-24s %-24s %-24s %-24s %-24s %-24s\n", label.c_str(),
                cell(t1, "ami", ref.task1_ami).c_str(), cell(t1, "ari", ref.task1_ari).c_str(),
                cell(t2, "ami", ref.task2_ami).c_str(), cell(t2, "ari", ref.task2_ari).c_str(),
                cell(t2, "auc", ref.task2_auc).c_str(), cell(t2, "ap", ref.task2_ap).c_str());
  };
  row(e->model_label, "modularity_aware", e->modularity_aware);
  row(standard_label, "standard", e->standard);
  row("Louvain", "louvain", e->louvain);

  if (e->name == "sbm-desk") {
    const double ma = report["families"]["modularity_aware"]["task1"]["aggregate"]["ami"]["mean"];
    const double lv = report["families"]["louvain"]["task1"]["aggregate"]["ami"]["mean"];
    std::printf("parity: |AMI(model) - AMI(Louvain)| = %.2f points on task 1 "
                "(reference rows agree within one std)\n",
                100 * std::abs(ma - lv));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modularity-aware graph autoencoders: training, evaluation and reproduction"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::size_t jobs_default = 1;
  try {
    jobs_default = default_jobs();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const std::string jobs_help = "worker threads (default: MODGAE_JOBS or 1)";

  // split
  SplitArgs split;
  auto* s = app.add_subcommand("split", "Mask 15% of edges: 10% test and 5% validation pairs");
  s->add_option("--edges", split.edges, "edge list, one 'u v' pair per line")->required();
  s->add_option("--seed", split.seed, "master seed")->capture_default_str();
  s->add_option("--out", split.out, "output directory")->required();
  s->callback([&] { cmd_split(split); });

  // train
  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model; the Louvain prior is computed on the training graph");
  t->add_option("--split", tr.split, "split directory written by 'split' (trains on train.edges)");
  t->add_option("--edges", tr.edges, "edge list to train on");
  t->add_option("--features", tr.features, "dense features CSV, row i = original node id i (default: identity)");
  t->add_option("--preset", tr.preset, "tuned hyperparameters: blogs, cora-featureless, cora-features, "
                                       "citeseer-featureless, citeseer-features, pubmed-featureless, "
                                       "pubmed-features, cora-large, sbm, album");
  t->add_option("--config", tr.config, "TrainConfig JSON; overrides the preset, flags override it");
  t->add_option("--out", tr.out, "run directory")->required();
  auto over = [&](CLI::Option* o, std::function<void(TrainConfig&)> f) { tr.overrides.emplace_back(o, std::move(f)); };
  over(t->add_option("--model", tr.model, "gae or vgae")->check(CLI::IsMember({"gae", "vgae"})),
       [&](TrainConfig& c) { c.variational = tr.model == "vgae"; });
  over(t->add_option("--encoder", tr.encoder, "linear or gcn (two layers)")->check(CLI::IsMember({"linear", "gcn"})),
       [&](TrainConfig& c) { c.encoder = tr.encoder == "gcn" ? EncoderKind::gcn2 : EncoderKind::linear; });
  over(t->add_option("--dim", tr.dim, "embedding dimension (default 16)")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.dim = tr.dim; });
  over(t->add_option("--hidden", tr.hidden, "hidden width of the gcn encoder (default 32)")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.hidden = tr.hidden; });
  over(t->add_option("--lambda", tr.lambda, "weight of the prior operator in the encoder")->check(CLI::NonNegativeNumber),
       [&](TrainConfig& c) { c.lambda = tr.lambda; });
  over(t->add_option("--beta", tr.beta, "weight of the modularity regularizer")->check(CLI::NonNegativeNumber),
       [&](TrainConfig& c) { c.beta = tr.beta; });
  over(t->add_option("--gamma", tr.gamma, "kernel width of the regularizer")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.gamma = tr.gamma; });
  over(t->add_option("--s", tr.s, "prior sparsification: neighbours sampled per node")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.s = tr.s; });
  over(t->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.lr = tr.lr; });
  over(t->add_option("--iters", tr.iters, "training iterations")->check(CLI::PositiveNumber),
       [&](TrainConfig& c) { c.iterations = tr.iters; });
  over(t->add_option("--dropout", tr.dropout, "dropout rate on encoder inputs")->check(CLI::Range(0.0, 0.999)),
       [&](TrainConfig& c) { c.dropout = tr.dropout; });
  over(t->add_option("--fastgae", tr.fastgae, "FastGAE subgraph size (0 disables)"),
       [&](TrainConfig& c) { c.fastgae_size = tr.fastgae ? std::optional<std::size_t>(tr.fastgae) : std::nullopt; });
  over(t->add_option("--clip", tr.clip, "global gradient-norm clip (0 disables)")->check(CLI::NonNegativeNumber),
       [&](TrainConfig& c) { c.clip = tr.clip; });
  over(t->add_option("--seed", tr.seed, "master seed"), [&](TrainConfig& c) { c.seed = tr.seed; });
  t->callback([&] { cmd_train(tr); });

  // eval
  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score a run: community detection (cd) or joint link prediction (lpcd)");
  e->add_option("--run", ev.run, "run directory written by 'train'");
  e->add_option("--runs", ev.runs, "glob of run directories; reports mean ± std");
  e->add_option("--task", ev.task, "cd or lpcd")->check(CLI::IsMember({"cd", "lpcd"}))->capture_default_str();
  e->add_option("--labels", ev.labels, "ground truth CSV 'node_id,community_id'")->required();
  e->add_option("--k", ev.k, "k-means clusters (default: number of ground truth classes)");
  e->add_option("--partition", ev.partition, "score this partition instead of k-means on the embedding, "
                                             "e.g. the run's louvain.csv");
  e->add_option("--split", ev.split, "split directory for lpcd (default: the one the run trained on)");
  e->add_option("--seed", ev.seed, "k-means seed (default: derived from the run's seed)");
  e->add_option("--out", ev.out, "metrics JSON path (default: inside the run directory)");
  e->callback([&] { cmd_eval(ev); });

  // search
  SearchArgs se;
  se.jobs = jobs_default;
  auto* h = app.add_subcommand("search", "Grid search maximizing (validation AUC + modularity) / 2");
  h->add_option("--grid", se.grid, "grid JSON: base, preset (full|desk), per-key lists, runs_per_point")->required();
  h->add_option("--split", se.split, "split directory")->required();
  h->add_option("--features", se.features, "dense features CSV (default: identity)");
  h->add_option("--labels", se.labels, "labels CSV; only its class count is used, as k");
  h->add_option("--k", se.k, "k-means clusters");
  h->add_option("--budget", se.budget, "evaluate at most this many evenly spaced points (0: all)")->capture_default_str();
  h->add_option("--jobs", se.jobs, jobs_help)->check(CLI::PositiveNumber);
  h->add_option("--out", se.out, "output directory")->required();
  h->callback([&] { cmd_search(se); });

  // sbm
  SbmArgs sb;
  auto* g = app.add_subcommand("sbm", "Generate a stochastic block model dataset directory");
  g->add_option("--communities", sb.config.communities, "number of blocks")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--size", sb.config.community_size, "nodes per block")->capture_default_str()->check(CLI::PositiveNumber);
  g->add_option("--pin", sb.config.p_in, "within-block edge probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  g->add_option("--pout", sb.config.p_out, "between-block edge probability")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  g->add_option("--seed", sb.config.seed, "seed")->capture_default_str();
  g->add_option("--out", sb.out, "output directory")->required();
  g->callback([&] { cmd_sbm(sb); });

  // reproduce
  ReproduceArgs rp;
  rp.jobs = jobs_default;
  std::vector<std::string> names;
  for (const auto& x : experiments()) names.push_back(x.name);
  auto* r = app.add_subcommand("reproduce", "Run the full protocol over several seeds and compare with reference scores");
  r->add_option("--experiment", rp.experiment, "experiment name")->required()->check(CLI::IsMember(names));
  r->add_option("--runs", rp.runs, "number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
  r->add_option("--out", rp.out, "output directory")->required();
  r->add_option("--data-dir", rp.data_dir, "directory holding <dataset>/graph.edges and <dataset>/labels.csv")
      ->capture_default_str();
  r->add_option("--seed", rp.seed, "master seed")->capture_default_str();
  r->add_option("--jobs", rp.jobs, jobs_help)->check(CLI::PositiveNumber);
  r->callback([&] { cmd_reproduce(rp); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitUsage;
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "data error: " << err.what() << '\n';
    return kExitData;
  } catch (const NumericError& err) {
    std::cerr << "numeric error: " << err.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
