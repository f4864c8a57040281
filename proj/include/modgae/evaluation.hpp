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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modgae/clustering.hpp"
#include "modgae/common.hpp"
#include "modgae/graph.hpp"
#include "modgae/model.hpp"
#include "modgae/prior.hpp"

namespace modgae {

/// Train/validation/test edge split with sampled non-edges.
struct EdgeSplit {
  Graph train_graph;
  std::vector<Edge> val_pos, val_neg;
  std::vector<Edge> test_pos, test_neg;
  std::uint64_t seed = 0;
};

/// The part of a split that model selection may look at: no test pairs.
struct ValidationSplit {
  Graph train_graph;
  std::vector<Edge> val_pos, val_neg;

  static ValidationSplit of(const EdgeSplit& s) {
    return {s.train_graph, s.val_pos, s.val_neg};
  }
};

inline constexpr double kTestFraction = 0.10;
inline constexpr double kValidationFraction = 0.05;

/// Masks 10% (test) and 5% (validation) of the edges uniformly at random and
/// draws as many non-edges of the original graph for each set.
inline EdgeSplit split_edges(const Graph& g, std::uint64_t seed) {
  if (g.m() < 20) throw DataError("need at least 20 edges to split");
  Rng rng(splitmix64(seed));
  std::vector<Edge> edges = g.edges();
  for (std::size_t i = edges.size(); i > 1; --i) {
    std::swap(edges[i - 1], edges[uniform_index(rng, i)]);
  }
  const auto m = static_cast<double>(g.m());
  const auto n_test = static_cast<std::size_t>(std::floor(kTestFraction * m));
  const auto n_val = static_cast<std::size_t>(std::floor(kValidationFraction * m));

  EdgeSplit s;
  s.seed = seed;
  s.test_pos.assign(edges.begin(), edges.begin() + n_test);
  s.val_pos.assign(edges.begin() + n_test, edges.begin() + n_test + n_val);
  s.train_graph = Graph::from_edges(
      g.n(), std::span<const Edge>(edges.data() + n_test + n_val,
                                   edges.size() - n_test - n_val));

  const std::size_t needed = n_test + n_val;
  const std::size_t cap = 100 * needed;
  std::set<Edge> chosen;
  std::size_t attempts = 0;
  auto draw = [&](std::vector<Edge>& out, std::size_t count) {
    while (out.size() < count) {
      if (attempts++ >= cap) {
        throw DataError("graph too dense to sample " + std::to_string(needed) +
                        " non-edges");
      }
      auto i = static_cast<Node>(uniform_index(rng, g.n()));
      auto j = static_cast<Node>(uniform_index(rng, g.n()));
      if (i == j || g.has_edge(i, j)) continue;
      if (!chosen.emplace(std::min(i, j), std::max(i, j)).second) continue;
      out.emplace_back(std::min(i, j), std::max(i, j));
    }
  };
  draw(s.test_neg, n_test);
  draw(s.val_neg, n_val);
  return s;
}

// ---------------------------------------------------------------------------
// Ranking metrics

namespace detail {

inline void check_binary(std::span<const double> scores, std::span<const int> labels,
                         std::size_t& pos, std::size_t& neg) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores/labels length mismatch");
  pos = neg = 0;
  for (int l : labels) {
    if (l == 1) {
      ++pos;
    } else if (l == 0) {
      ++neg;
    } else {
      throw std::invalid_argument("labels must be 0 or 1");
    }
  }
}

}  // namespace detail

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_binary(scores, labels, pos, neg);
  if (pos == 0 || neg == 0) throw std::invalid_argument("AUC needs both classes");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos), q = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

/// Step-wise area under the precision-recall curve; ties keep input order.
inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  detail::check_binary(scores, labels, pos, neg);
  if (pos == 0) throw std::invalid_argument("average precision needs a positive");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (labels[idx[r]] != 1) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return ap / static_cast<double>(pos);
}

// ---------------------------------------------------------------------------
// Partition agreement

struct Contingency {
  std::vector<std::vector<double>> table;  // rows: p1 communities
  std::vector<double> rows, cols;
  double n = 0.0;
};

inline Contingency contingency(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw std::invalid_argument("partitions differ in length");
  Contingency c;
  c.table.assign(a.k(), std::vector<double>(b.k(), 0.0));
  c.rows.assign(a.k(), 0.0);
  c.cols.assign(b.k(), 0.0);
  for (std::size_t i = 0; i < a.n(); ++i) {
    c.table[a[i]][b[i]] += 1.0;
    c.rows[a[i]] += 1.0;
    c.cols[b[i]] += 1.0;
  }
  c.n = static_cast<double>(a.n());
  return c;
}

inline double entropy(std::span<const double> counts, double n) {
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) h -= c / n * std::log(c / n);
  }
  return h;
}

inline double mutual_information(const Contingency& c) {
  double mi = 0.0;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    for (std::size_t j = 0; j < c.cols.size(); ++j) {
      const double nij = c.table[i][j];
      if (nij > 0.0) mi += nij / c.n * std::log(c.n * nij / (c.rows[i] * c.cols[j]));
    }
  }
  return mi;
}

/// E[MI] under the hypergeometric (permutation) model.
inline double expected_mutual_information(const Contingency& c) {
  const double n = c.n;
  double emi = 0.0;
  for (double a : c.rows) {
    for (double b : c.cols) {
      const double lo = std::max(1.0, a + b - n);
      const double hi = std::min(a, b);
      for (double nij = lo; nij <= hi; nij += 1.0) {
        const double log_p = std::lgamma(a + 1) + std::lgamma(b + 1) +
                             std::lgamma(n - a + 1) + std::lgamma(n - b + 1) -
                             std::lgamma(n + 1) - std::lgamma(nij + 1) -
                             std::lgamma(a - nij + 1) - std::lgamma(b - nij + 1) -
                             std::lgamma(n - a - b + nij + 1);
        emi += nij / n * std::log(n * nij / (a * b)) * std::exp(log_p);
      }
    }
  }
  return emi;
}

/// Adjusted mutual information, arithmetic-mean normalization, natural log.
inline double ami(const Partition& a, const Partition& b) {
  const Contingency c = contingency(a, b);
  if ((a.k() == 1 && b.k() == 1) || (a.k() == a.n() && b.k() == b.n())) return 1.0;
  const double mi = mutual_information(c);
  const double emi = expected_mutual_information(c);
  const double h = 0.5 * (entropy(c.rows, c.n) + entropy(c.cols, c.n));
  double denom = h - emi;
  const double eps = std::numeric_limits<double>::epsilon();
  denom = denom < 0.0 ? std::min(denom, -eps) : std::max(denom, eps);
  return (mi - emi) / denom;
}

/// Adjusted Rand index from pair counts of the contingency table.
inline double ari(const Partition& a, const Partition& b) {
  const Contingency c = contingency(a, b);
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (const auto& row : c.table) {
    for (double nij : row) index += comb2(nij);
  }
  for (double x : c.rows) sum_a += comb2(x);
  for (double x : c.cols) sum_b += comb2(x);
  // Scaled by C(n, 2) so that every term stays an integer (exact for
  // moderate n) and small fixtures come out exactly.
  const double pairs = comb2(c.n);
  const double expected = sum_a * sum_b;
  const double max_index = 0.5 * (sum_a + sum_b) * pairs;
  if (max_index == expected) return 1.0;
  return (index * pairs - expected) / (max_index - expected);
}

// ---------------------------------------------------------------------------
// Task evaluation

struct MetricsReport {
  std::optional<double> ami, ari, auc, ap, modularity;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j = nlohmann::json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("ami", r.ami);
  put("ari", r.ari);
  put("auc", r.auc);
  put("ap", r.ap);
  put("modularity", r.modularity);
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  auto get = [&](const char* key, std::optional<double>& v) {
    if (j.contains(key) && j[key].is_number()) v = j[key].get<double>();
  };
  get("ami", r.ami);
  get("ari", r.ari);
  get("auc", r.auc);
  get("ap", r.ap);
  get("modularity", r.modularity);
  return r;
}

/// Mean and sample standard deviation of every field present in all reports.
inline nlohmann::json aggregate(std::span<const MetricsReport> reports) {
  nlohmann::json out = {{"runs", reports.size()}};
  auto field = [&](const char* key, auto member) {
    std::vector<double> xs;
    for (const auto& r : reports) {
      if (!(r.*member)) return;
      xs.push_back(*(r.*member));
    }
    if (xs.empty()) return;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
    out[key] = {{"mean", mean}, {"std", sd}};
  };
  field("ami", &MetricsReport::ami);
  field("ari", &MetricsReport::ari);
  field("auc", &MetricsReport::auc);
  field("ap", &MetricsReport::ap);
  field("modularity", &MetricsReport::modularity);
  return out;
}

/// Community detection scores of a given partition.
inline MetricsReport evaluate_task1(const Graph& g, const Partition& found,
                                    const Partition& ground_truth) {
  if (ground_truth.n() != g.n() || found.n() != g.n()) {
    throw DataError("ground truth must cover every node");
  }
  MetricsReport r;
  r.ami = ami(found, ground_truth);
  r.ari = ari(found, ground_truth);
  if (g.m() > 0) r.modularity = modularity(g, found);
  return r;
}

/// Community detection from an embedding: k-means with k = |ground truth|.
inline MetricsReport evaluate_task1(const Graph& g, const Embedding& e,
                                    const Partition& ground_truth, std::uint64_t seed) {
  if (ground_truth.n() != g.n()) throw DataError("ground truth must cover every node");
  const KMeansResult km = kmeans(e.z, ground_truth.k(), seed);
  return evaluate_task1(g, km.partition, ground_truth);
}

/// Decoder scores and 0/1 labels for positive then negative pairs.
inline void pair_scores(const Embedding& e, std::span<const Edge> pos,
                        std::span<const Edge> neg, std::vector<double>& scores,
                        std::vector<int>& labels) {
  scores.clear();
  labels.clear();
  for (auto [i, j] : pos) {
    scores.push_back(decode_pair(e, i, j));
    labels.push_back(1);
  }
  for (auto [i, j] : neg) {
    scores.push_back(decode_pair(e, i, j));
    labels.push_back(0);
  }
}

inline double validation_auc(const ValidationSplit& v, const Embedding& e) {
  std::vector<double> s;
  std::vector<int> l;
  pair_scores(e, v.val_pos, v.val_neg, s, l);
  return auc(s, l);
}

/// Joint link prediction (test pairs) and community detection.
inline MetricsReport evaluate_task2(const EdgeSplit& split, const Embedding& e,
                                    const Partition& ground_truth, std::uint64_t seed) {
  MetricsReport r = evaluate_task1(split.train_graph, e, ground_truth, seed);
  std::vector<double> s;
  std::vector<int> l;
  pair_scores(e, split.test_pos, split.test_neg, s, l);
  r.auc = auc(s, l);
  r.ap = average_precision(s, l);
  return r;
}

// ---------------------------------------------------------------------------
// Split directories

inline void write_pairs(const std::filesystem::path& path, std::span<const Edge> pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "u,v\n";
  for (auto [u, v] : pairs) out << u << ',' << v << '\n';
}

inline std::vector<Edge> read_pairs(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<Edge> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line == "u,v") continue;
    const auto comma = line.find(',');
    std::uint64_t u = 0, v = 0;
    if (comma == std::string::npos || !detail::parse_uint(detail::trim(line.substr(0, comma)), u) ||
        !detail::parse_uint(detail::trim(line.substr(comma + 1)), v) || u >= n || v >= n) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad pair row");
    }
    out.emplace_back(static_cast<Node>(u), static_cast<Node>(v));
  }
  return out;
}

/// Writes train.edges, {val,test}_{pos,neg}.csv and node_map.csv (internal ids).
inline void write_split(const std::filesystem::path& dir, const EdgeSplit& s,
                        std::span<const std::uint64_t> original_ids) {
  std::filesystem::create_directories(dir);
  write_edge_list(dir / "train.edges", s.train_graph);
  write_pairs(dir / "val_pos.csv", s.val_pos);
  write_pairs(dir / "val_neg.csv", s.val_neg);
  write_pairs(dir / "test_pos.csv", s.test_pos);
  write_pairs(dir / "test_neg.csv", s.test_neg);
  write_node_map(dir / "node_map.csv", original_ids);
}

struct LoadedSplit {
  EdgeSplit split;
  std::vector<std::uint64_t> original_ids;
};

inline LoadedSplit read_split(const std::filesystem::path& dir) {
  LoadedSplit out;
  out.original_ids = read_node_map(dir / "node_map.csv");
  const std::size_t n = out.original_ids.size();
  out.split.train_graph = load_edge_list(dir / "train.edges", {n}).graph;
  out.split.val_pos = read_pairs(dir / "val_pos.csv", n);
  out.split.val_neg = read_pairs(dir / "val_neg.csv", n);
  out.split.test_pos = read_pairs(dir / "test_pos.csv", n);
  out.split.test_neg = read_pairs(dir / "test_neg.csv", n);
  return out;
}

}  // namespace modgae
