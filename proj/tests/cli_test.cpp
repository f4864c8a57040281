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

// End-to-end checks of the modgae binary: exit codes, artifacts, reruns.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "modgae/modgae.hpp"

namespace modgae {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("modgae_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    // Small planted graph shared by the tests.
    write_dataset_dir(root_ / "data", generate_sbm({4, 25, 0.3, 0.01, 7}));
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  // Runs the binary with `args`; stdout goes to `out`, stderr to `err`.
  int run(const std::string& args) {
    const std::string cmd = std::string(MODGAE_CLI_PATH) + " " + args + " > " +
                            (root_ / "stdout.txt").string() + " 2> " + (root_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    out = slurp(root_ / "stdout.txt");
    err = slurp(root_ / "stderr.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string p(const std::string& rel) const { return (root_ / rel).string(); }

  // Split of the shared graph plus one trained run on it.
  void prepare_run(const std::string& name, const std::string& extra = "") {
    if (!fs::exists(root_ / "split")) {
      ASSERT_EQ(run("split --edges " + p("data/graph.edges") + " --seed 1 --out " + p("split")), 0) << err;
    }
    ASSERT_EQ(run("train --split " + p("split") + " --model vgae --lambda 0.5 --beta 0.1 --gamma 2 --s 5 "
                  "--iters 60 --out " + p(name) + " " + extra), 0) << err;
  }

  static fs::path root_;
  std::string out, err;
};

fs::path Cli::root_;

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_NE(out.find("reproduce"), std::string::npos);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("split --seed 1 --out " + p("nowhere")), 2);
  EXPECT_NE(err.find("--edges"), std::string::npos) << err;
  EXPECT_EQ(run("train --edges " + p("data/graph.edges") + " --model mlp --out " + p("x")), 2);
  EXPECT_EQ(run("train --out " + p("x")), 2) << "neither --split nor --edges";
  EXPECT_EQ(run("train --edges " + p("data/graph.edges") + " --preset nosuch --out " + p("x")), 2);
}

TEST_F(Cli, DataErrorsExitThree) {
  EXPECT_EQ(run("split --edges " + p("missing.edges") + " --out " + p("x")), 3);
  std::ofstream(root_ / "bad.edges") << "0 1\n1 two\n";
  EXPECT_EQ(run("split --edges " + p("bad.edges") + " --out " + p("x")), 3);
  EXPECT_NE(err.find(":2:"), std::string::npos) << err;
  EXPECT_EQ(run("train --edges " + p("data/graph.edges") + " --features " + p("none.csv") +
                " --out " + p("x")),
            3);
  EXPECT_EQ(run("reproduce --experiment cora-featureless --runs 1 --data-dir " + p("empty") +
                " --out " + p("x")),
            3);
}

TEST_F(Cli, SplitCountsAndByteIdenticalRerun) {
  const Graph g = load_edge_list(root_ / "data/graph.edges").graph;
  ASSERT_EQ(run("split --edges " + p("data/graph.edges") + " --seed 9 --out " + p("s1")), 0) << err;
  ASSERT_EQ(run("split --edges " + p("data/graph.edges") + " --seed 9 --out " + p("s2")), 0) << err;
  for (const char* f : {"train.edges", "val_pos.csv", "val_neg.csv", "test_pos.csv", "test_neg.csv",
                        "node_map.csv", "manifest.json"}) {
    ASSERT_TRUE(fs::exists(root_ / "s1" / f)) << f;
    EXPECT_EQ(slurp(root_ / "s1" / f), slurp(root_ / "s2" / f)) << f;
  }
  const LoadedSplit s = read_split(root_ / "s1");
  const auto m = g.m();
  EXPECT_EQ(s.split.test_pos.size(), m / 10);
  EXPECT_EQ(s.split.val_pos.size(), m / 20);
  EXPECT_EQ(s.split.train_graph.m(), m - m / 10 - m / 20);
  ASSERT_EQ(run("split --edges " + p("data/graph.edges") + " --seed 10 --out " + p("s3")), 0);
  EXPECT_NE(slurp(root_ / "s1/test_pos.csv"), slurp(root_ / "s3/test_pos.csv"));
}

TEST_F(Cli, SplitManifestRecordsFingerprintAndSeed) {
  ASSERT_EQ(run("split --edges " + p("data/graph.edges") + " --seed 4 --out " + p("s4")), 0) << err;
  const json m = read_json(root_ / "s4/manifest.json");
  EXPECT_EQ(m["command"], "split");
  EXPECT_EQ(m["seeds"]["seed"], 4);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fingerprint(load_edge_list(root_ / "data/graph.edges").graph)));
  EXPECT_EQ(m["dataset_fingerprint"], hex);
  EXPECT_EQ(m["tool_version"], std::string(kVersion));
}

TEST_F(Cli, TrainWritesRunDirectory) {
  prepare_run("run_a");
  for (const char* f : {"manifest.json", "config.json", "telemetry.jsonl", "embedding.csv",
                        "params/manifest.json", "louvain.csv", "node_map.csv", "graph.edges"}) {
    EXPECT_TRUE(fs::exists(root_ / "run_a" / f)) << f;
  }
  const Embedding e = read_embedding_csv(root_ / "run_a/embedding.csv");
  EXPECT_EQ(e.n(), 100u);
  EXPECT_EQ(e.z.cols(), 16);
  std::ifstream tel(root_ / "run_a/telemetry.jsonl");
  std::string line;
  std::vector<std::size_t> iters;
  while (std::getline(tel, line)) iters.push_back(json::parse(line)["iter"].get<std::size_t>());
  EXPECT_EQ(iters, (std::vector<std::size_t>{0, 10, 20, 30, 40, 50, 59}));
  const json m = read_json(root_ / "run_a/manifest.json");
  EXPECT_EQ(m["config"]["inputs"]["split"], p("split"));
  EXPECT_EQ(load_params(root_ / "run_a/params").variational, true);
}

TEST_F(Cli, TrainRerunIsIdentical) {
  prepare_run("run_b", "--seed 3");
  prepare_run("run_c", "--seed 3");
  EXPECT_EQ(slurp(root_ / "run_b/embedding.csv"), slurp(root_ / "run_c/embedding.csv"));
  EXPECT_EQ(slurp(root_ / "run_b/louvain.csv"), slurp(root_ / "run_c/louvain.csv"));
  EXPECT_EQ(slurp(root_ / "run_b/manifest.json"), slurp(root_ / "run_c/manifest.json"));
}

TEST_F(Cli, ConfigPrecedenceFlagsOverJsonOverPreset) {
  std::ofstream(root_ / "cfg.json") << R"({"lambda": 0.3, "beta": 0.2, "iterations": 20})";
  ASSERT_EQ(run("train --edges " + p("data/graph.edges") + " --preset sbm --fastgae 0 --config " +
                p("cfg.json") + " --lambda 0.1 --out " + p("prec")),
            0)
      << err;
  const TrainConfig c = read_json(root_ / "prec/config.json").get<TrainConfig>();
  EXPECT_EQ(c.lambda, 0.1);     // flag
  EXPECT_EQ(c.beta, 0.2);       // config JSON
  EXPECT_EQ(c.iterations, 20u);  // config JSON
  EXPECT_EQ(c.gamma, 2.0);      // preset
  EXPECT_EQ(c.s, 10u);          // preset
  EXPECT_TRUE(c.variational);   // preset
  EXPECT_FALSE(c.fastgae_size);  // flag
}

TEST_F(Cli, ZeroLambdaBetaTrainsStandardModel) {
  ASSERT_EQ(run("train --edges " + p("data/graph.edges") + " --lambda 0 --beta 0 --iters 30 --seed 5 --out " +
                p("std")),
            0)
      << err;
  // Same embedding as the library's standard path with the same seed.
  TrainConfig c;
  c.iterations = 30;
  c.seed = 5;
  const Graph g = load_edge_list(root_ / "data/graph.edges").graph;
  const auto lib = run_model(g, FeatureMatrix::identity(g.n()), c, false);
  const Embedding cli = read_embedding_csv(root_ / "std/embedding.csv");
  EXPECT_EQ((cli.z - lib.trained.embedding.z).cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(Cli, DivergenceExitsFour) {
  std::ofstream x(root_ / "inf.csv");
  for (int i = 0; i < 100; ++i) x << (i == 3 ? "inf" : "1") << ",0\n";
  x.close();
  EXPECT_EQ(run("train --edges " + p("data/graph.edges") + " --features " + p("inf.csv") + " --iters 5 --out " +
                p("div")),
            4);
  EXPECT_NE(err.find("encoder output"), std::string::npos) << err;
  EXPECT_TRUE(fs::exists(root_ / "div/params_last_finite/manifest.json"));
}

TEST_F(Cli, EvalOracleEmbeddingScoresOne) {
  prepare_run("run_oracle");
  // One-hot of the planted block as the embedding.
  const auto ids = read_node_map(root_ / "run_oracle/node_map.csv");
  const Partition truth = read_partition(root_ / "data/labels.csv", ids);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ids.size()), 4);
  for (std::size_t i = 0; i < ids.size(); ++i) z(static_cast<Eigen::Index>(i), truth[i]) = 1.0;
  write_matrix_csv(root_ / "run_oracle/embedding.csv", z);
  ASSERT_EQ(run("eval --run " + p("run_oracle") + " --task cd --labels " + p("data/labels.csv")), 0) << err;
  const json j = json::parse(out);
  EXPECT_NEAR(j["ami"].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(j["ari"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(read_json(root_ / "run_oracle/metrics.json"), j);
}

TEST_F(Cli, EvalLinkPredictionUsesTheRunsSplit) {
  prepare_run("run_lp");
  ASSERT_EQ(run("eval --run " + p("run_lp") + " --task lpcd --labels " + p("data/labels.csv")), 0) << err;
  const json j = json::parse(out);
  // Independent recomputation from the artifacts.
  const LoadedSplit s = read_split(root_ / "split");
  const Embedding e = read_embedding_csv(root_ / "run_lp/embedding.csv");
  std::vector<double> scores;
  std::vector<int> labels;
  pair_scores(e, s.split.test_pos, s.split.test_neg, scores, labels);
  EXPECT_EQ(j["auc"].get<double>(), auc(scores, labels));
  EXPECT_EQ(j["ap"].get<double>(), average_precision(scores, labels));
  const TrainConfig c = read_json(root_ / "run_lp/config.json").get<TrainConfig>();
  const Partition truth = read_partition(root_ / "data/labels.csv", s.original_ids);
  const MetricsReport cd = evaluate_task1(s.split.train_graph, e, truth, kmeans_seed(c.seed));
  EXPECT_EQ(j["ami"].get<double>(), *cd.ami);
  EXPECT_EQ(j["modularity"].get<double>(), *cd.modularity);
}

TEST_F(Cli, EvalLouvainPartitionGivesBaselineRow) {
  prepare_run("run_lv");
  ASSERT_EQ(run("eval --run " + p("run_lv") + " --labels " + p("data/labels.csv") + " --partition " +
                p("run_lv/louvain.csv")),
            0)
      << err;
  const json j = json::parse(out);
  const LoadedSplit s = read_split(root_ / "split");
  const Partition truth = read_partition(root_ / "data/labels.csv", s.original_ids);
  const TrainConfig c = read_json(root_ / "run_lv/config.json").get<TrainConfig>();
  const Partition lv = louvain(s.split.train_graph, louvain_seed(c.seed));
  EXPECT_EQ(j["ami"].get<double>(), ami(lv, truth));
  EXPECT_EQ(j["modularity"].get<double>(), modularity(s.split.train_graph, lv));
  EXPECT_TRUE(fs::exists(root_ / "run_lv/metrics_louvain.json"));
}

TEST_F(Cli, EvalRunsGlobAggregatesMeanAndSampleStd) {
  prepare_run("multi_1", "--seed 1");
  prepare_run("multi_2", "--seed 2");
  prepare_run("multi_3", "--seed 3");
  ASSERT_EQ(run("eval --runs '" + p("multi_*") + "' --labels " + p("data/labels.csv") + " --out " +
                p("agg.json")),
            0)
      << err;
  const json agg = json::parse(out);
  EXPECT_EQ(agg["runs"], 3);
  std::vector<double> a;
  for (int r = 1; r <= 3; ++r) {
    a.push_back(read_json(root_ / ("multi_" + std::to_string(r)) / "metrics.json")["ami"].get<double>());
  }
  const double mean = (a[0] + a[1] + a[2]) / 3;
  double ss = 0;
  for (double v : a) ss += (v - mean) * (v - mean);
  EXPECT_NEAR(agg["ami"]["mean"].get<double>(), mean, 1e-15);
  EXPECT_NEAR(agg["ami"]["std"].get<double>(), std::sqrt(ss / 2), 1e-15);
  EXPECT_EQ(read_json(root_ / "agg.json"), agg);
}

TEST_F(Cli, SearchSinglePointAndBudget) {
  prepare_run("run_s");
  std::ofstream(root_ / "one.json") << R"({"base": {"iterations": 30, "seed": 2}, "lambda": [0.5], "beta": [0.1], "runs_per_point": 1})";
  ASSERT_EQ(run("search --grid " + p("one.json") + " --split " + p("split") + " --labels " + p("data/labels.csv") +
                " --out " + p("search1")),
            0)
      << err;
  std::ifstream csv(root_ / "search1/grid.csv");
  std::string header, row, extra;
  std::getline(csv, header);
  std::getline(csv, row);
  EXPECT_FALSE(std::getline(csv, extra));
  EXPECT_EQ(row.substr(0, 2), "0,");
  const TrainConfig best = read_json(root_ / "search1/best.json").get<TrainConfig>();
  EXPECT_EQ(best.lambda, 0.5);
  EXPECT_EQ(best.iterations, 30u);
  // best.json feeds straight back into train.
  ASSERT_EQ(run("train --split " + p("split") + " --config " + p("search1/best.json") + " --out " +
                p("from_best")),
            0)
      << err;

  std::ofstream(root_ / "desk.json") << R"({"preset": "desk", "base": {"seed": 2}, "iterations": [20], "runs_per_point": 1})";
  ASSERT_EQ(run("search --grid " + p("desk.json") + " --split " + p("split") + " --k 4 --budget 3 --jobs 2 --out " +
                p("search3")),
            0)
      << err;
  std::ifstream csv3(root_ / "search3/grid.csv");
  std::size_t rows = 0;
  while (std::getline(csv3, row)) ++rows;
  EXPECT_EQ(rows, 4u);
  EXPECT_EQ(run("search --grid " + p("one.json") + " --split " + p("split") + " --out " + p("x")), 2)
      << "needs --labels or --k";
}

TEST_F(Cli, SbmCliqueConfiguration) {
  ASSERT_EQ(run("sbm --communities 3 --size 5 --pin 1 --pout 0 --seed 1 --out " + p("cliques")), 0) << err;
  const Graph g = load_edge_list(root_ / "cliques/graph.edges").graph;
  EXPECT_EQ(g.n(), 15u);
  EXPECT_EQ(g.m(), 3u * 10u);
  const Partition truth = read_partition(root_ / "cliques/labels.csv");
  EXPECT_EQ(truth.k(), 3u);
  EXPECT_EQ(ami(louvain(g, 1), truth), 1.0);
}

TEST_F(Cli, SbmMatchesLibraryGenerator) {
  ASSERT_EQ(run("sbm --seed 11 --out " + p("desk")), 0) << err;
  const Dataset d = generate_sbm({10, 100, 2e-2, 2e-4, 11});
  EXPECT_EQ(load_edge_list(root_ / "desk/graph.edges").graph, d.graph);
  EXPECT_EQ(out, "n=1000 m=" + std::to_string(d.graph.m()) + "\n");
}

TEST_F(Cli, ReproduceSingleRunSmoke) {
  ASSERT_EQ(run("reproduce --experiment sbm-desk --runs 1 --jobs 1 --out " + p("repro")), 0) << err;
  const json r = read_json(root_ / "repro/report.json");
  EXPECT_EQ(r["runs"], 1);
  for (const char* family : {"modularity_aware", "standard", "louvain"}) {
    EXPECT_EQ(r["families"][family]["task1"]["runs"].size(), 1u) << family;
    EXPECT_EQ(r["families"][family]["task2"]["runs"].size(), 1u) << family;
  }
  EXPECT_TRUE(r["families"]["modularity_aware"]["task2"]["aggregate"].contains("auc"));
  EXPECT_NE(out.find("Louvain"), std::string::npos);
  EXPECT_NE(out.find("parity"), std::string::npos);
  EXPECT_TRUE(fs::exists(root_ / "repro/manifest.json"));
}

}  // namespace
}  // namespace modgae
