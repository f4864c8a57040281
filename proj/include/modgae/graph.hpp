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
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "modgae/common.hpp"

namespace modgae {

using Node = std::uint32_t;
using Edge = std::pair<Node, Node>;

/// Immutable simple undirected graph stored as a symmetric 0/1 adjacency in
/// row-compressed form with sorted column indices. No self-loops are stored.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph on `n` nodes. Self-loops and duplicate (including
  /// reversed) edges are dropped; the counts are available afterwards.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges) {
    Graph g;
    g.offsets_.assign(n + 1, 0);
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) {
        throw DataError("edge (" + std::to_string(u) + ", " +
                        std::to_string(v) + ") out of range for n = " +
                        std::to_string(n));
      }
      if (u == v) {
        ++g.dropped_self_loops_;
        continue;
      }
      canon.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(canon.begin(), canon.end());
    const auto last = std::unique(canon.begin(), canon.end());
    g.dropped_duplicates_ = static_cast<std::size_t>(canon.end() - last);
    canon.erase(last, canon.end());

    for (auto [u, v] : canon) {
      ++g.offsets_[u + 1];
      ++g.offsets_[v + 1];
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    g.indices_.resize(g.offsets_[n]);
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (auto [u, v] : canon) {
      g.indices_[cursor[u]++] = v;
      g.indices_[cursor[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::sort(g.indices_.begin() + g.offsets_[i],
                g.indices_.begin() + g.offsets_[i + 1]);
    }
    g.m_ = canon.size();
    return g;
  }

  std::size_t n() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t m() const { return m_; }

  std::size_t degree(Node i) const { return offsets_[i + 1] - offsets_[i]; }

  std::span<const Node> neighbors(Node i) const {
    return {indices_.data() + offsets_[i], degree(i)};
  }

  bool has_edge(Node i, Node j) const {
    const auto nb = neighbors(i);
    return std::binary_search(nb.begin(), nb.end(), j);
  }

  /// Canonical edge list: pairs (u, v) with u < v in lexicographic order.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(m_);
    for (Node u = 0; u < n(); ++u) {
      for (Node v : neighbors(u)) {
        if (u < v) out.emplace_back(u, v);
      }
    }
    return out;
  }

  std::size_t dropped_duplicates() const { return dropped_duplicates_; }
  std::size_t dropped_self_loops() const { return dropped_self_loops_; }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.offsets_ == b.offsets_ && a.indices_ == b.indices_;
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Node> indices_;
  std::size_t m_ = 0;
  std::size_t dropped_duplicates_ = 0;
  std::size_t dropped_self_loops_ = 0;
};

inline std::vector<std::size_t> degrees(const Graph& g) {
  std::vector<std::size_t> d(g.n());
  for (Node i = 0; i < g.n(); ++i) d[i] = g.degree(i);
  return d;
}

/// Node features. Featureless graphs use the implicit identity (f = n).
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool is_identity = true;
  Eigen::MatrixXd values;  // empty when is_identity

  static FeatureMatrix identity(std::size_t n) { return {n, n, true, {}}; }

  static FeatureMatrix dense(Eigen::MatrixXd x) {
    const auto r = static_cast<std::size_t>(x.rows());
    const auto c = static_cast<std::size_t>(x.cols());
    return {r, c, false, std::move(x)};
  }
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Normalized propagation matrix used by the encoders.
struct SparseOperator {
  SparseRowMatrix matrix;
  std::size_t n() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Symmetric normalization of M = A + lambda * D + I, where D is a doping
/// graph on the same node set: entries M_ij / sqrt(r_i r_j) with r the row
/// sums of M. Entries whose fused weight is exactly zero are not stored.
inline SparseOperator fused_operator(const Graph& g, const Graph& doping,
                                     double lambda) {
  if (doping.n() != g.n()) {
    throw DataError("doping graph has " + std::to_string(doping.n()) +
                    " nodes, graph has " + std::to_string(g.n()));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
  const std::size_t n = g.n();
  std::vector<std::vector<std::pair<Node, double>>> rows(n);
  std::vector<double> row_sum(n, 0.0);
  for (Node i = 0; i < n; ++i) {
    auto a = g.neighbors(i);
    auto s = doping.neighbors(i);
    auto& row = rows[i];
    row.reserve(a.size() + s.size() + 1);
    std::size_t p = 0, q = 0;
    bool diag_done = false;
    auto emit = [&](Node j, double w) {
      if (!diag_done && j > i) {
        row.emplace_back(i, 1.0);
        diag_done = true;
      }
      if (w != 0.0) row.emplace_back(j, w);
    };
    while (p < a.size() || q < s.size()) {
      if (q == s.size() || (p < a.size() && a[p] < s[q])) {
        emit(a[p++], 1.0);
      } else if (p == a.size() || s[q] < a[p]) {
        emit(s[q++], lambda);
      } else {
        emit(a[p], 1.0 + lambda);
        ++p;
        ++q;
      }
    }
    if (!diag_done) row.emplace_back(i, 1.0);
    for (const auto& e : row) row_sum[i] += e.second;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (Node i = 0; i < n; ++i) {
    for (auto [j, w] : rows[i]) {
      triplets.emplace_back(i, j, w / std::sqrt(row_sum[i] * row_sum[j]));
    }
  }
  SparseOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

/// D^{-1/2}(A + I)D^{-1/2}, the undoped propagation matrix.
inline SparseOperator normalized_adjacency(const Graph& g) {
  return fused_operator(g, Graph::from_edges(g.n(), {}), 0.0);
}

// ---------------------------------------------------------------------------
// Edge-list files

struct LoadOptions {
  /// Fixes the node count; ids must then lie in [0, node_count) and are kept.
  std::optional<std::size_t> node_count;
};

struct LoadedGraph {
  Graph graph;
  /// original_ids[internal] = id as written in the file.
  std::vector<std::uint64_t> original_ids;
  std::size_t duplicates = 0;
  std::size_t self_loops = 0;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_uint(const std::string& tok, std::uint64_t& out) {
  if (tok.empty() || tok.size() > 19) return false;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
  }
  out = std::stoull(tok);
  return true;
}

}  // namespace detail

/// Parses whitespace separated integer pairs, one edge per line. Text after
/// '#' is ignored, except a "# nodes: N" header, which fixes the node count
/// so that isolated nodes survive. Ids already forming 0..n-1 are kept as
/// is; otherwise they are remapped by first appearance.
inline LoadedGraph parse_edge_list(std::istream& in, const std::string& name,
                                   LoadOptions opts = {}) {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> raw;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      const std::string comment = detail::trim(line.substr(hash + 1));
      std::uint64_t count = 0;
      if (comment.rfind("nodes:", 0) == 0 && !opts.node_count &&
          detail::parse_uint(detail::trim(comment.substr(6)), count)) {
        opts.node_count = count;
      }
      line.resize(hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    std::uint64_t u = 0, v = 0;
    if (!(ss >> a >> b) || (ss >> extra) || !detail::parse_uint(a, u) ||
        !detail::parse_uint(b, v)) {
      throw DataError(name + ":" + std::to_string(lineno) +
                      ": expected two non-negative integer ids, got '" + line +
                      "'");
    }
    raw.emplace_back(u, v);
  }
  if (raw.empty() && !opts.node_count) {
    throw DataError(name + ": empty graph (no edges)");
  }

  LoadedGraph out;
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  std::size_t n = 0;
  if (opts.node_count) {
    n = *opts.node_count;
    for (std::size_t k = 0; k < raw.size(); ++k) {
      auto [u, v] = raw[k];
      if (u >= n || v >= n) {
        throw DataError(name + ": id out of range for " + std::to_string(n) +
                        " nodes");
      }
      edges.emplace_back(static_cast<Node>(u), static_cast<Node>(v));
    }
    out.original_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.original_ids[i] = i;
  } else {
    std::unordered_map<std::uint64_t, Node> remap;
    std::uint64_t max_id = 0;
    for (auto [u, v] : raw) {
      for (auto id : {u, v}) {
        max_id = std::max(max_id, id);
        if (remap.emplace(id, static_cast<Node>(remap.size())).second) {
          out.original_ids.push_back(id);
        }
      }
    }
    n = remap.size();
    const bool contiguous = max_id + 1 == n;
    if (contiguous) {
      for (std::size_t i = 0; i < n; ++i) out.original_ids[i] = i;
    }
    for (auto [u, v] : raw) {
      if (contiguous) {
        edges.emplace_back(static_cast<Node>(u), static_cast<Node>(v));
      } else {
        edges.emplace_back(remap.at(u), remap.at(v));
      }
    }
  }
  out.graph = Graph::from_edges(n, edges);
  out.duplicates = out.graph.dropped_duplicates();
  out.self_loops = out.graph.dropped_self_loops();
  return out;
}

inline LoadedGraph load_edge_list(const std::filesystem::path& path,
                                  const LoadOptions& opts = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge list " + path.string());
  return parse_edge_list(in, path.string(), opts);
}

/// Canonical form: sorted "u v" lines with u < v, newline-terminated.
inline void write_edge_list(std::ostream& out, const Graph& g) {
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

inline void write_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_edge_list(out, g);
}

inline std::string canonical_string(const Graph& g) {
  std::ostringstream ss;
  write_edge_list(ss, g);
  return ss.str();
}

/// Hash of the canonical edge list.
inline std::uint64_t fingerprint(const Graph& g) {
  return fnv1a64(canonical_string(g));
}

inline void write_node_map(const std::filesystem::path& path,
                           std::span<const std::uint64_t> original_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "original_id,internal_id\n";
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    out << original_ids[i] << ',' << i << '\n';
  }
}

inline std::vector<std::uint64_t> read_node_map(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open node map " + path.string());
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line.rfind("original_id", 0) == 0) continue;
    const auto comma = line.find(',');
    std::uint64_t orig = 0, internal = 0;
    if (comma == std::string::npos ||
        !detail::parse_uint(detail::trim(line.substr(0, comma)), orig) ||
        !detail::parse_uint(detail::trim(line.substr(comma + 1)), internal)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": malformed node map row");
    }
    rows.emplace_back(orig, internal);
  }
  std::vector<std::uint64_t> ids(rows.size());
  for (auto [orig, internal] : rows) {
    if (internal >= ids.size()) throw DataError("node map is not contiguous");
    ids[internal] = orig;
  }
  return ids;
}

/// Dense features, one row per internal node, no header.
inline FeatureMatrix load_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open features file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const std::string t = detail::trim(cell);
        row.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw DataError(path.string() + ":" + std::to_string(lineno) +
                        ": non-numeric feature value");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": ragged feature row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path.string() + ": no feature rows");
  Eigen::MatrixXd x(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) x(i, j) = rows[i][j];
  }
  return FeatureMatrix::dense(std::move(x));
}

}  // namespace modgae
