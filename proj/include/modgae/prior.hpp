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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "modgae/common.hpp"
#include "modgae/graph.hpp"

namespace modgae {

/// Node-to-community assignment with contiguous community ids 0..k-1.
class Partition {
 public:
  Partition() = default;

  /// Relabels arbitrary labels to 0..k-1 by first appearance.
  template <typename Label>
  static Partition from_labels(std::span<const Label> labels) {
    Partition p;
    std::unordered_map<Label, std::uint32_t> ids;
    p.assignment_.reserve(labels.size());
    for (const auto& l : labels) {
      auto [it, fresh] = ids.emplace(l, static_cast<std::uint32_t>(ids.size()));
      if (fresh) p.sizes_.push_back(0);
      ++p.sizes_[it->second];
      p.assignment_.push_back(it->second);
    }
    return p;
  }

  static Partition from_labels(const std::vector<std::uint32_t>& labels) {
    return from_labels(std::span<const std::uint32_t>(labels));
  }

  static Partition singletons(std::size_t n) {
    std::vector<std::uint32_t> l(n);
    std::iota(l.begin(), l.end(), 0u);
    return from_labels(l);
  }

  std::size_t n() const { return assignment_.size(); }
  std::size_t k() const { return sizes_.size(); }
  std::uint32_t operator[](std::size_t i) const { return assignment_[i]; }
  const std::vector<std::uint32_t>& assignment() const { return assignment_; }
  const std::vector<std::size_t>& sizes() const { return sizes_; }

  /// Members of every community, in increasing node order.
  std::vector<std::vector<Node>> members() const {
    std::vector<std::vector<Node>> out(k());
    for (std::size_t c = 0; c < k(); ++c) out[c].reserve(sizes_[c]);
    for (std::size_t i = 0; i < n(); ++i) {
      out[assignment_[i]].push_back(static_cast<Node>(i));
    }
    return out;
  }

  friend bool operator==(const Partition&, const Partition&) = default;

 private:
  std::vector<std::uint32_t> assignment_;
  std::vector<std::size_t> sizes_;
};

/// (A_c)_ij: true iff i != j share a community.
inline bool same_community(const Partition& p, std::size_t i, std::size_t j) {
  if (i >= p.n() || j >= p.n()) {
    throw std::out_of_range("node id out of range");
  }
  return i != j && p[i] == p[j];
}

/// Q = (1/2m) sum_ij [A_ij - d_i d_j / 2m] delta(c_i, c_j), in O(n + m).
inline double modularity(const Graph& g, const Partition& p) {
  if (p.n() != g.n()) {
    throw DataError("partition covers " + std::to_string(p.n()) +
                    " nodes, graph has " + std::to_string(g.n()));
  }
  if (g.m() == 0) throw DataError("modularity is undefined for m = 0");
  std::vector<double> inside(p.k(), 0.0), total(p.k(), 0.0);
  for (Node i = 0; i < g.n(); ++i) {
    total[p[i]] += static_cast<double>(g.degree(i));
    for (Node j : g.neighbors(i)) {
      if (p[i] == p[j]) inside[p[i]] += 1.0;
    }
  }
  const double two_m = 2.0 * static_cast<double>(g.m());
  double q = 0.0;
  for (std::size_t c = 0; c < p.k(); ++c) {
    q += inside[c] / two_m - (total[c] / two_m) * (total[c] / two_m);
  }
  return q;
}

namespace detail {

// Weighted symmetric graph used across Louvain levels. `loop[i]` holds the
// ordered-pair weight inside super-node i (twice its internal edge weight).
struct LouvainGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj;
  std::vector<double> loop;
  double two_m = 0.0;

  std::size_t size() const { return adj.size(); }

  double strength(std::size_t i) const {
    double k = loop[i];
    for (const auto& e : adj[i]) k += e.second;
    return k;
  }
};

inline LouvainGraph louvain_base(const Graph& g) {
  LouvainGraph lg;
  lg.adj.resize(g.n());
  lg.loop.assign(g.n(), 0.0);
  for (Node i = 0; i < g.n(); ++i) {
    for (Node j : g.neighbors(i)) lg.adj[i].emplace_back(j, 1.0);
  }
  lg.two_m = 2.0 * static_cast<double>(g.m());
  return lg;
}

// Local moving phase on one level. Returns the community of every node
// (not renumbered) and whether any node moved.
inline bool louvain_local_moves(const LouvainGraph& lg, Rng& rng,
                                std::vector<std::uint32_t>& comm) {
  const std::size_t n = lg.size();
  comm.resize(n);
  std::iota(comm.begin(), comm.end(), 0u);
  std::vector<double> k(n), tot(n), in(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = lg.strength(i);
    tot[i] = k[i];
    in[i] = lg.loop[i];
  }
  auto quality = [&] {
    double q = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (tot[c] > 0.0) q += in[c] / lg.two_m - (tot[c] / lg.two_m) * (tot[c] / lg.two_m);
    }
    return q;
  };

  std::vector<double> to_comm(n, -1.0);
  std::vector<std::uint32_t> touched;
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  bool any_move = false;
  double q = quality();
  for (;;) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    std::size_t moves = 0;
    for (std::uint32_t i : order) {
      const std::uint32_t own = comm[i];
      touched.clear();
      to_comm[own] = 0.0;
      touched.push_back(own);
      for (const auto& [j, w] : lg.adj[i]) {
        const std::uint32_t c = comm[j];
        if (to_comm[c] < 0.0) {
          to_comm[c] = 0.0;
          touched.push_back(c);
        }
        to_comm[c] += w;
      }
      tot[own] -= k[i];
      in[own] -= 2.0 * to_comm[own] + lg.loop[i];

      std::sort(touched.begin() + 1, touched.end());
      std::uint32_t best = own;
      double best_gain = to_comm[own] - tot[own] * k[i] / lg.two_m;
      for (std::size_t t = 1; t < touched.size(); ++t) {
        const std::uint32_t c = touched[t];
        const double gain = to_comm[c] - tot[c] * k[i] / lg.two_m;
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k[i];
      in[best] += 2.0 * to_comm[best] + lg.loop[i];
      comm[i] = best;
      if (best != own) ++moves;
      for (std::uint32_t c : touched) to_comm[c] = -1.0;
    }
    const double q_next = quality();
    if (moves > 0) any_move = true;
    if (moves == 0 || q_next - q < 1e-7) break;
    q = q_next;
  }
  return any_move;
}

// Renumbers `comm` to 0..k-1 by first appearance; returns k.
inline std::uint32_t renumber(std::vector<std::uint32_t>& comm) {
  std::vector<std::uint32_t> id(comm.size(), UINT32_MAX);
  std::uint32_t k = 0;
  for (auto& c : comm) {
    if (id[c] == UINT32_MAX) id[c] = k++;
    c = id[c];
  }
  return k;
}

inline LouvainGraph louvain_aggregate(const LouvainGraph& lg,
                                      const std::vector<std::uint32_t>& comm,
                                      std::uint32_t k) {
  LouvainGraph out;
  out.adj.resize(k);
  out.loop.assign(k, 0.0);
  out.two_m = lg.two_m;
  std::vector<std::unordered_map<std::uint32_t, double>> acc(k);
  for (std::size_t i = 0; i < lg.size(); ++i) {
    const std::uint32_t ci = comm[i];
    out.loop[ci] += lg.loop[i];
    for (const auto& [j, w] : lg.adj[i]) {
      const std::uint32_t cj = comm[j];
      if (ci == cj) {
        out.loop[ci] += w;
      } else {
        acc[ci][cj] += w;
      }
    }
  }
  for (std::uint32_t c = 0; c < k; ++c) {
    out.adj[c].assign(acc[c].begin(), acc[c].end());
    std::sort(out.adj[c].begin(), out.adj[c].end());
  }
  return out;
}

}  // namespace detail

/// Louvain modularity maximization (local moves + aggregation until no node
/// moves). Only the final level is returned.
inline Partition louvain(const Graph& g, Rng& rng) {
  std::vector<std::uint32_t> node_comm(g.n());
  std::iota(node_comm.begin(), node_comm.end(), 0u);
  if (g.m() == 0) return Partition::from_labels(node_comm);

  detail::LouvainGraph level = detail::louvain_base(g);
  std::vector<std::uint32_t> comm;
  for (;;) {
    const bool moved = detail::louvain_local_moves(level, rng, comm);
    if (!moved) break;
    const std::uint32_t k = detail::renumber(comm);
    for (auto& c : node_comm) c = comm[c];
    if (k == level.size()) break;
    level = detail::louvain_aggregate(level, comm, k);
  }
  return Partition::from_labels(node_comm);
}

inline Partition louvain(const Graph& g, std::uint64_t seed) {
  Rng rng(splitmix64(seed));
  return louvain(g, rng);
}

/// Sparsified prior operator A_s together with its doping weight.
struct PriorOperator {
  std::size_t n = 0;
  std::size_t s = 0;
  double lambda = 0.0;
  Graph matrix;  // symmetric 0/1, zero diagonal
};

/// Every node draws min(s, c - 1) distinct co-members uniformly without
/// replacement; the draws are symmetrized by union.
inline PriorOperator sparsify(const Partition& p, std::size_t s, double lambda,
                              std::uint64_t seed) {
  if (s < 1) throw std::invalid_argument("sparsification degree s must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  Rng rng(splitmix64(seed));
  const auto members = p.members();
  std::vector<Edge> edges;
  std::vector<Node> pool;
  for (Node i = 0; i < p.n(); ++i) {
    const auto& group = members[p[i]];
    if (group.size() < 2) continue;
    pool.clear();
    for (Node j : group) {
      if (j != i) pool.push_back(j);
    }
    const std::size_t draws = std::min(s, pool.size());
    for (std::size_t t = 0; t < draws; ++t) {
      const auto r = t + uniform_index(rng, pool.size() - t);
      std::swap(pool[t], pool[r]);
      edges.emplace_back(i, pool[t]);
    }
  }
  return {p.n(), s, lambda, Graph::from_edges(p.n(), edges)};
}

inline SparseOperator fused_operator(const Graph& g, const PriorOperator& prior) {
  return fused_operator(g, prior.matrix, prior.lambda);
}

// ---------------------------------------------------------------------------
// Partition CSV: "node_id,community_id"

inline void write_partition(const std::filesystem::path& path,
                            const Partition& p,
                            std::span<const std::uint64_t> original_ids = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "node_id,community_id\n";
  for (std::size_t i = 0; i < p.n(); ++i) {
    out << (original_ids.empty() ? i : original_ids[i]) << ',' << p[i] << '\n';
  }
}

/// Reads a partition keyed by original node ids. With `original_ids`
/// given, rows are mapped to internal ids and every node must be covered.
inline Partition read_partition(const std::filesystem::path& path,
                                std::span<const std::uint64_t> original_ids = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open partition file " + path.string());
  std::unordered_map<std::uint64_t, std::string> label_of;
  std::vector<std::uint64_t> order;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    std::uint64_t id = 0;
    if (comma == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected 'node_id,community_id'");
    }
    const std::string first = detail::trim(line.substr(0, comma));
    if (!detail::parse_uint(first, id)) {
      if (lineno == 1) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": bad node id '" + first + "'");
    }
    if (!label_of.emplace(id, detail::trim(line.substr(comma + 1))).second) {
      throw DataError(path.string() + ": node " + std::to_string(id) +
                      " listed twice");
    }
    order.push_back(id);
  }
  std::vector<std::string> labels;
  if (original_ids.empty()) {
    labels.resize(order.size());
    for (std::uint64_t id : order) {
      if (id >= order.size()) throw DataError(path.string() + ": ids are not 0..n-1");
      labels[id] = label_of[id];
    }
  } else {
    labels.reserve(original_ids.size());
    for (std::uint64_t id : original_ids) {
      auto it = label_of.find(id);
      if (it == label_of.end()) {
        throw DataError(path.string() + ": no label for node " + std::to_string(id));
      }
      labels.push_back(it->second);
    }
  }
  return Partition::from_labels(std::span<const std::string>(labels));
}

}  // namespace modgae
