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

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "modgae/common.hpp"
#include "modgae/graph.hpp"
#include "modgae/prior.hpp"

namespace modgae {

struct SbmConfig {
  std::size_t communities = 10;
  std::size_t community_size = 100;
  double p_in = 2e-2;
  double p_out = 2e-4;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::string name;
  Graph graph;
  std::optional<FeatureMatrix> features;
  std::optional<Partition> ground_truth;
  std::vector<std::uint64_t> original_ids;

  FeatureMatrix features_or_identity() const {
    return features ? *features : FeatureMatrix::identity(graph.n());
  }
};

namespace detail {

// Calls `emit(index)` for every index in [0, count) independently with
// probability p, jumping over misses with geometric skips.
template <typename F>
void bernoulli_indices(std::uint64_t count, double p, Rng& rng, F&& emit) {
  if (p <= 0.0 || count == 0) return;
  if (p >= 1.0) {
    for (std::uint64_t i = 0; i < count; ++i) emit(i);
    return;
  }
  const double log_q = std::log1p(-p);
  std::uint64_t i = 0;
  for (;;) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    const double skip = std::floor(std::log(u) / log_q);
    if (skip >= static_cast<double>(count - i)) return;
    i += static_cast<std::uint64_t>(skip);
    emit(i);
    if (++i >= count) return;
  }
}

}  // namespace detail

/// Stochastic block model with equal blocks; nodes of block b are
/// b*size .. (b+1)*size - 1.
inline Dataset generate_sbm(const SbmConfig& cfg) {
  if (!(0.0 <= cfg.p_out && cfg.p_out <= cfg.p_in && cfg.p_in <= 1.0)) {
    throw std::invalid_argument("SBM needs 0 <= p_out <= p_in <= 1");
  }
  if (cfg.communities == 0 || cfg.community_size == 0) {
    throw std::invalid_argument("SBM needs at least one non-empty block");
  }
  Rng rng(splitmix64(cfg.seed));
  const std::uint64_t size = cfg.community_size;
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < cfg.communities; ++a) {
    const std::uint64_t base_a = a * size;
    // Upper triangle of block a, row-major pairs (u < v).
    detail::bernoulli_indices(size * (size - 1) / 2, cfg.p_in, rng, [&](std::uint64_t idx) {
      // Invert idx = u*size - u(u+1)/2 + (v - u - 1).
      std::uint64_t u = 0, row = size - 1;
      while (idx >= row) {
        idx -= row;
        ++u;
        --row;
      }
      const std::uint64_t v = u + 1 + idx;
      edges.emplace_back(static_cast<Node>(base_a + u), static_cast<Node>(base_a + v));
    });
    for (std::size_t b = a + 1; b < cfg.communities; ++b) {
      const std::uint64_t base_b = b * size;
      detail::bernoulli_indices(size * size, cfg.p_out, rng, [&](std::uint64_t idx) {
        edges.emplace_back(static_cast<Node>(base_a + idx / size),
                           static_cast<Node>(base_b + idx % size));
      });
    }
  }
  Dataset d;
  d.name = "sbm";
  const std::size_t n = cfg.communities * cfg.community_size;
  d.graph = Graph::from_edges(n, edges);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(i / size);
  d.ground_truth = Partition::from_labels(labels);
  d.original_ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.original_ids[i] = i;
  return d;
}

/// Reference sizes of the known benchmarks.
struct DatasetManifest {
  std::string name;
  std::size_t n, m, classes;
  std::optional<std::size_t> features;
};

inline const std::vector<DatasetManifest>& dataset_manifests() {
  static const std::vector<DatasetManifest> manifests = {
      {"cora", 2708, 5429, 7, 1433},
      {"citeseer", 3327, 4732, 6, 3703},
      {"pubmed", 19717, 44338, 3, 500},
      {"cora-large", 23166, 91500, 70, std::nullopt},
      {"blogs", 1224, 19025, 2, std::nullopt},
  };
  return manifests;
}

inline std::optional<DatasetManifest> find_manifest(const std::string& name) {
  for (const auto& m : dataset_manifests()) {
    if (m.name == name) return m;
  }
  return std::nullopt;
}

/// Reorders feature rows, which are keyed by original node id, into
/// internal node order.
inline FeatureMatrix rows_by_original_id(const FeatureMatrix& x,
                                         std::span<const std::uint64_t> original_ids) {
  Eigen::MatrixXd ordered(static_cast<Eigen::Index>(original_ids.size()), x.values.cols());
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    if (original_ids[i] >= x.rows) {
      throw DataError("no feature row for node " + std::to_string(original_ids[i]));
    }
    ordered.row(static_cast<Eigen::Index>(i)) =
        x.values.row(static_cast<Eigen::Index>(original_ids[i]));
  }
  return FeatureMatrix::dense(std::move(ordered));
}

struct DatasetPaths {
  std::string name;
  std::filesystem::path edges;
  std::optional<std::filesystem::path> features;
  std::optional<std::filesystem::path> labels;
};

/// Loads a dataset from files. Counts are checked against the built-in
/// manifest for known names; mismatches are reported on `warn`, since
/// circulating copies of these graphs differ slightly.
inline Dataset load_dataset(const DatasetPaths& paths, std::ostream& warn = std::cerr) {
  Dataset d;
  d.name = paths.name;
  LoadedGraph lg = load_edge_list(paths.edges);
  d.graph = std::move(lg.graph);
  d.original_ids = std::move(lg.original_ids);
  if (paths.features) {
    if (!std::filesystem::exists(*paths.features)) {
      throw DataError("features file " + paths.features->string() + " does not exist");
    }
    d.features = rows_by_original_id(load_features_csv(*paths.features), d.original_ids);
  }
  if (paths.labels) d.ground_truth = read_partition(*paths.labels, d.original_ids);

  if (auto m = find_manifest(paths.name)) {
    auto check = [&](const char* what, std::size_t seen, std::size_t expected) {
      if (seen != expected) {
        warn << "warning: " << paths.name << " " << what << " = " << seen
             << " (reference " << expected << ")\n";
      }
    };
    check("n", d.graph.n(), m->n);
    check("m", d.graph.m(), m->m);
    if (d.ground_truth) check("classes", d.ground_truth->k(), m->classes);
    if (d.features && m->features) check("f", d.features->cols, *m->features);
  }
  return d;
}

/// Dataset directory layout: graph.edges, labels.csv and, optionally,
/// features.csv (rows keyed by original node id).
inline DatasetPaths dataset_dir_paths(const std::filesystem::path& dir, const std::string& name,
                                      bool with_features) {
  DatasetPaths p{name, dir / "graph.edges", std::nullopt, dir / "labels.csv"};
  if (with_features) p.features = dir / "features.csv";
  if (!std::filesystem::exists(p.edges)) {
    throw DataError("dataset " + name + ": missing " + p.edges.string());
  }
  if (!std::filesystem::exists(*p.labels)) {
    throw DataError("dataset " + name + ": missing " + p.labels->string());
  }
  return p;
}

inline void write_dataset_dir(const std::filesystem::path& dir, const Dataset& d) {
  std::filesystem::create_directories(dir);
  std::ofstream edges(dir / "graph.edges");
  if (!edges) throw DataError("cannot write " + (dir / "graph.edges").string());
  bool identity = true;
  for (std::size_t i = 0; i < d.original_ids.size(); ++i) identity &= d.original_ids[i] == i;
  if (identity) edges << "# nodes: " << d.graph.n() << '\n';
  for (auto [u, v] : d.graph.edges()) {
    edges << d.original_ids[u] << ' ' << d.original_ids[v] << '\n';
  }
  if (d.ground_truth) write_partition(dir / "labels.csv", *d.ground_truth, d.original_ids);
  write_node_map(dir / "node_map.csv", d.original_ids);
}

}  // namespace modgae
