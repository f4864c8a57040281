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

#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "modgae/datasets.hpp"
#include "modgae/evaluation.hpp"
#include "modgae/prior.hpp"
#include "oracles.hpp"

namespace modgae {
namespace {

Graph two_triangles_with_bridge() {
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {0, 2}, {2, 3}, {3, 4}, {4, 5}, {3, 5}};
  return Graph::from_edges(6, e);
}

TEST(Partition, RenumbersByFirstAppearance) {
  const auto p = Partition::from_labels(std::vector<std::uint32_t>{7, 7, 3, 9, 3});
  EXPECT_EQ(p.assignment(), (std::vector<std::uint32_t>{0, 0, 1, 2, 1}));
  EXPECT_EQ(p.k(), 3u);
  EXPECT_EQ(p.sizes(), (std::vector<std::size_t>{2, 2, 1}));
}

TEST(SameCommunity, Definition) {
  const auto p = Partition::from_labels(std::vector<std::uint32_t>{0, 0, 1});
  EXPECT_FALSE(same_community(p, 0, 0));
  EXPECT_TRUE(same_community(p, 0, 1));
  EXPECT_FALSE(same_community(p, 0, 2));
  EXPECT_THROW(same_community(p, 0, 3), std::out_of_range);
}

TEST(Modularity, Fixtures) {
  const Graph g = two_triangles_with_bridge();
  EXPECT_NEAR(modularity(g, Partition::from_labels(std::vector<std::uint32_t>(6, 0))), 0.0, 1e-15);
  EXPECT_NEAR(modularity(g, Partition::from_labels(std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1})),
              5.0 / 14.0, 1e-12);
  EXPECT_NEAR(modularity(g, Partition::singletons(6)), -34.0 / 196.0, 1e-12);
}

TEST(Modularity, MatchesDoubleSumOracle) {
  std::mt19937_64 rng(21);
  int checked = 0;
  while (checked < 100) {
    const std::size_t n = 2 + rng() % 49;
    const Graph g = oracle::random_graph(n, 0.05 + 0.3 * std::uniform_real_distribution<>()(rng), rng);
    if (g.m() == 0) continue;
    const std::size_t k = 1 + rng() % n;
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % k);
    const auto p = Partition::from_labels(labels);
    EXPECT_NEAR(modularity(g, p), oracle::modularity(g, p.assignment()), 1e-10);
    ++checked;
  }
}

TEST(Modularity, Errors) {
  EXPECT_THROW(modularity(Graph::from_edges(3, {}), Partition::singletons(3)), DataError);
  EXPECT_THROW(modularity(two_triangles_with_bridge(), Partition::singletons(5)), DataError);
}

TEST(Louvain, DisjointTriangles) {
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  const auto p = louvain(Graph::from_edges(6, e), std::uint64_t{1});
  EXPECT_EQ(p.k(), 2u);
  EXPECT_EQ(p.assignment(), (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1}));
}

TEST(Louvain, IsolatedNodesStaySingletons) {
  const std::vector<Edge> e = {{0, 1}, {1, 2}, {0, 2}};
  const auto p = louvain(Graph::from_edges(5, e), std::uint64_t{4});
  EXPECT_EQ(p.k(), 3u);
  EXPECT_NE(p[3], p[4]);
}

TEST(Louvain, DeterministicUnderSeed) {
  std::mt19937_64 rng(2);
  const Graph g = oracle::random_graph(60, 0.08, rng);
  EXPECT_EQ(louvain(g, std::uint64_t{9}), louvain(g, std::uint64_t{9}));
}

TEST(Louvain, NeverWorseThanSingletons) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    const Graph g = oracle::random_graph(40, 0.1, rng);
    if (g.m() == 0) continue;
    const auto p = louvain(g, static_cast<std::uint64_t>(rep));
    EXPECT_GE(modularity(g, p), modularity(g, Partition::singletons(g.n())) - 1e-12);
    EXPECT_GE(modularity(g, p), 0.0);
  }
}

TEST(Louvain, ModularityNeverDecreasesAcrossPasses) {
  std::mt19937_64 graphs(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Graph g = oracle::random_graph(80, 0.06, graphs);
    if (g.m() == 0) continue;
    Rng rng(rep);
    std::vector<std::uint32_t> node_comm(g.n());
    std::iota(node_comm.begin(), node_comm.end(), 0u);
    double last = modularity(g, Partition::from_labels(node_comm));
    auto level = detail::louvain_base(g);
    std::vector<std::uint32_t> comm;
    while (detail::louvain_local_moves(level, rng, comm)) {
      const auto k = detail::renumber(comm);
      for (auto& c : node_comm) c = comm[c];
      const double q = modularity(g, Partition::from_labels(node_comm));
      EXPECT_GE(q, last - 1e-12);
      last = q;
      if (k == level.size()) break;
      level = detail::louvain_aggregate(level, comm, k);
    }
  }
}

TEST(Louvain, RecoversDeskScaleBlocks) {
  SbmConfig cfg;
  cfg.seed = 1;
  const Dataset d = generate_sbm(cfg);
  const auto p = louvain(d.graph, std::uint64_t{1});
  const double score = ami(p, *d.ground_truth);
  RecordProperty("ami", std::to_string(score));
  EXPECT_GE(score, 0.95);
}

TEST(Louvain, CliquesAreRecoveredExactly) {
  SbmConfig cfg;
  cfg.communities = 5;
  cfg.community_size = 12;
  cfg.p_in = 1.0;
  cfg.p_out = 0.0;
  const Dataset d = generate_sbm(cfg);
  EXPECT_DOUBLE_EQ(ami(louvain(d.graph, std::uint64_t{3}), *d.ground_truth), 1.0);
}

void expect_membership(const Partition& p, const PriorOperator& op, std::size_t s) {
  for (Node i = 0; i < p.n(); ++i) {
    const std::size_t c = p.sizes()[p[i]];
    EXPECT_GE(op.matrix.degree(i), std::min(s, c - 1));
    EXPECT_LE(op.matrix.degree(i), c - 1);
    for (Node j : op.matrix.neighbors(i)) EXPECT_TRUE(same_community(p, i, j));
  }
}

TEST(Sparsify, FullCommunitiesWhenSIsLarge) {
  const auto p = Partition::from_labels(std::vector<std::uint32_t>{0, 0, 0, 1, 1, 2, 0});
  const auto op = sparsify(p, 10, 0.5, 1);
  for (Node i = 0; i < p.n(); ++i) {
    for (Node j = 0; j < p.n(); ++j) {
      EXPECT_EQ(op.matrix.has_edge(i, j), same_community(p, i, j));
    }
  }
  EXPECT_EQ(op.matrix.degree(5), 0u);
}

TEST(Sparsify, DegreeBoundsForSOne) {
  const auto p = Partition::from_labels(std::vector<std::uint32_t>{0, 0, 0, 0});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto op = sparsify(p, 1, 1.0, seed);
    for (Node i = 0; i < 4; ++i) {
      EXPECT_GE(op.matrix.degree(i), 1u);
      EXPECT_LE(op.matrix.degree(i), 3u);
    }
  }
}

TEST(Sparsify, MembershipInvariantAcrossSeeds) {
  std::mt19937_64 rng(31);
  std::vector<std::uint32_t> labels(200);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % 12);
  const auto p = Partition::from_labels(labels);
  std::set<std::string> distinct;
  for (std::size_t s : {1, 2, 5, 10}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto op = sparsify(p, s, 0.3, seed);
      expect_membership(p, op, s);
      distinct.insert(canonical_string(op.matrix));
      EXPECT_EQ(op.matrix, sparsify(p, s, 0.3, seed).matrix);
    }
  }
  EXPECT_EQ(distinct.size(), 20u);
}

TEST(PartitionCsv, RoundTripThroughOriginalIds) {
  const auto dir = std::filesystem::temp_directory_path() / "modgae_prior_test";
  std::filesystem::create_directories(dir);
  const auto p = Partition::from_labels(std::vector<std::uint32_t>{0, 1, 0, 2});
  const std::vector<std::uint64_t> ids = {40, 10, 30, 20};
  write_partition(dir / "p.csv", p, ids);
  EXPECT_EQ(read_partition(dir / "p.csv", ids), p);
  const std::vector<std::uint64_t> missing = {40, 10, 30, 99};
  EXPECT_THROW(read_partition(dir / "p.csv", missing), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace modgae
