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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modgae/common.hpp"
#include "modgae/graph.hpp"
#include "modgae/model.hpp"

namespace modgae {

/// Objective terms. GAE: total = reconstruction - regularizer (minimized).
/// VGAE: total = elbo + regularizer (maximized) with
/// elbo = -reconstruction - kl.
struct LossBreakdown {
  double reconstruction = 0.0;
  double kl = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
};

/// Nodes kept for one FastGAE iteration and the subgraph they induce
/// (local id a corresponds to global node nodes[a]).
struct SubgraphSample {
  std::vector<Node> nodes;
  Graph induced;
};

inline Graph induced_subgraph(const Graph& g, const std::vector<Node>& nodes) {
  std::vector<std::int64_t> local(g.n(), -1);
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    local[nodes[a]] = static_cast<std::int64_t>(a);
  }
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (Node v : g.neighbors(nodes[a])) {
      const auto b = local[v];
      if (b > static_cast<std::int64_t>(a)) {
        edges.emplace_back(static_cast<Node>(a), static_cast<Node>(b));
      }
    }
  }
  return Graph::from_edges(nodes.size(), edges);
}

/// Draws n_sub distinct nodes with probability proportional to degree,
/// sequentially without replacement (Efraimidis-Spirakis keys). Degree-0
/// nodes are only drawn once positive-degree nodes run out, uniformly.
inline SubgraphSample fastgae_sample(const Graph& g, std::size_t n_sub, Rng& rng) {
  if (n_sub < 1 || n_sub > g.n()) {
    throw std::invalid_argument("FastGAE sample size must lie in [1, n]");
  }
  struct Key {
    int tier;
    double key;
    Node node;
  };
  std::vector<Key> keys(g.n());
  for (Node i = 0; i < g.n(); ++i) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    const auto d = static_cast<double>(g.degree(i));
    keys[i] = d > 0.0 ? Key{1, std::log(u) / d, i} : Key{0, u, i};
  }
  auto better = [](const Key& a, const Key& b) {
    if (a.tier != b.tier) return a.tier > b.tier;
    if (a.key != b.key) return a.key > b.key;
    return a.node < b.node;
  };
  SubgraphSample s;
  if (n_sub < g.n()) {
    std::nth_element(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_sub),
                     keys.end(), better);
  }
  s.nodes.reserve(n_sub);
  for (std::size_t t = 0; t < n_sub; ++t) s.nodes.push_back(keys[t].node);
  std::sort(s.nodes.begin(), s.nodes.end());
  s.induced = induced_subgraph(g, s.nodes);
  return s;
}

namespace detail {

inline constexpr double kProbClamp = 1e-10;

struct PairTerms {
  double reconstruction = 0.0;
  double regularizer = 0.0;
  // dL/dZ = coeff * Z for L = reconstruction - regularizer.
  Eigen::MatrixXd coeff;
};

// Weighted cross-entropy against T = A + I and the soft-modularity term over
// all ordered pairs of the rows of `z`, whose graph is `g`.
inline PairTerms pair_terms(const Eigen::MatrixXd& z, const Graph& g,
                            double beta, double gamma, bool with_grad) {
  const auto n = z.rows();
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const double positives = 2.0 * static_cast<double>(g.m()) + static_cast<double>(n);
  const double negatives = nn - positives;
  double pos_weight = 1.0, norm = 1.0;
  if (negatives > 0.0) {
    pos_weight = negatives / positives;
    norm = nn / (2.0 * negatives);
  }
  const double scale = norm / nn;

  PairTerms out;
  Eigen::MatrixXd s = z * z.transpose();
  if (with_grad) out.coeff.resize(n, n);

  auto clamp_prob = [](double p) {
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  };
  auto clamped = [](double p) {
    return p < kProbClamp || p > 1.0 - kProbClamp;
  };

  double negative_sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(s(i, j));
      negative_sum += -std::log(1.0 - clamp_prob(p));
      if (with_grad) out.coeff(i, j) = clamped(p) ? 0.0 : scale * p;
    }
  }
  double positive_fix = 0.0;
  auto positive = [&](Eigen::Index i, Eigen::Index j) {
    const double p = sigmoid(s(i, j));
    const double pc = clamp_prob(p);
    positive_fix += -pos_weight * std::log(pc) + std::log(1.0 - pc);
    if (with_grad) out.coeff(i, j) = clamped(p) ? 0.0 : -scale * pos_weight * (1.0 - p);
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    positive(i, i);
    for (Node j : g.neighbors(static_cast<Node>(i))) positive(i, j);
  }
  out.reconstruction = scale * (negative_sum + positive_fix);
  if (with_grad) {
    Eigen::MatrixXd sym = out.coeff + out.coeff.transpose();
    out.coeff = std::move(sym);
  }

  if (beta == 0.0 || g.m() == 0) return out;

  const double two_m = 2.0 * static_cast<double>(g.m());
  Eigen::VectorXd sq = z.rowwise().squaredNorm();
  Eigen::VectorXd deg(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    deg(i) = static_cast<double>(g.degree(static_cast<Node>(i)));
  }
  // Reuse s to hold K_ij = B_ij exp(-gamma ||z_i - z_j||^2).
  double reg_sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dist = i == j ? 0.0 : std::max(0.0, sq(i) + sq(j) - 2.0 * s(i, j));
      const double k = -deg(i) * deg(j) / two_m * std::exp(-gamma * dist);
      s(i, j) = k;
      reg_sum += k;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Node j : g.neighbors(static_cast<Node>(i))) {
      const double dist = std::max(0.0, sq(i) + sq(j) - 2.0 * z.row(i).dot(z.row(j)));
      const double e = std::exp(-gamma * dist);
      s(i, j) += e;
      reg_sum += e;
    }
  }
  out.regularizer = beta / two_m * reg_sum;
  if (with_grad) {
    const double c = 4.0 * beta * gamma / two_m;
    out.coeff.noalias() -= c * s;
    out.coeff.diagonal() += c * s.rowwise().sum();
  }
  return out;
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m,
                                   const std::vector<Node>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    out.row(static_cast<Eigen::Index>(a)) = m.row(rows[a]);
  }
  return out;
}

}  // namespace detail

/// Weighted binary cross-entropy between sigma(z_i . z_j) and A + I.
inline double reconstruction_loss(const Embedding& e, const Graph& g) {
  if (e.n() != g.n()) throw DataError("embedding rows do not match graph size");
  detail::require_finite(e.z, "embedding");
  return detail::pair_terms(e.z, g, 0.0, 0.0, false).reconstruction;
}

/// (beta / 2m) sum_ij [A_ij - d_i d_j / 2m] exp(-gamma ||z_i - z_j||^2).
inline double modularity_regularizer(const Embedding& e, const Graph& g,
                                     double beta, double gamma) {
  if (e.n() != g.n()) throw DataError("embedding rows do not match graph size");
  if (g.m() == 0) throw DataError("regularizer is undefined for m = 0");
  if (beta < 0.0 || gamma < 0.0) throw std::invalid_argument("beta, gamma must be >= 0");
  return detail::pair_terms(e.z, g, beta, gamma, false).regularizer;
}

/// KL(N(mu, diag exp(logvar)) || N(0, I)) averaged over nodes.
inline double kl_divergence(const Embedding& e) {
  if (!e.variational()) throw std::invalid_argument("KL needs a variational embedding");
  const auto lv = e.logvar.array();
  const double sum =
      0.5 * (e.mu.array().square() + lv.exp() - 1.0 - lv).sum();
  return sum / static_cast<double>(e.mu.rows());
}

/// Hyperparameters that shape the objective.
struct ObjectiveConfig {
  bool variational = false;
  double beta = 0.0;
  double gamma = 0.0;
  double dropout = 0.0;
};

struct ObjectiveResult {
  ParamGrads grads;  // gradient of `loss.total`
  LossBreakdown loss;
};

/// Forward and reverse pass of the full objective in train mode. With a
/// sample, reconstruction, regularizer and KL are computed on the sampled
/// nodes and their induced subgraph.
inline ObjectiveResult objective_gradients(const ModelParams& params,
                                           const SparseOperator& op,
                                           const FeatureMatrix& x, const Graph& g,
                                           const ObjectiveConfig& cfg, Rng& rng,
                                           const SubgraphSample* sample = nullptr) {
  if (op.n() != g.n()) throw DataError("operator and graph sizes differ");
  const ForwardCache cache =
      encode_with_cache(params, op, x, rng, cfg.dropout, true);
  const Embedding& e = cache.embedding;
  detail::require_finite(e.z, "encoder output");

  const Graph& graph = sample ? sample->induced : g;
  const Eigen::MatrixXd z_local =
      sample ? detail::gather_rows(e.z, sample->nodes) : e.z;
  detail::PairTerms terms =
      detail::pair_terms(z_local, graph, cfg.beta, cfg.gamma, true);
  Eigen::MatrixXd grad_local = terms.coeff * z_local;
  terms.coeff.resize(0, 0);

  Eigen::MatrixXd grad_z;
  if (sample) {
    grad_z = Eigen::MatrixXd::Zero(e.z.rows(), e.z.cols());
    for (std::size_t a = 0; a < sample->nodes.size(); ++a) {
      grad_z.row(sample->nodes[a]) = grad_local.row(static_cast<Eigen::Index>(a));
    }
  } else {
    grad_z = std::move(grad_local);
  }

  ObjectiveResult r;
  r.loss.reconstruction = terms.reconstruction;
  r.loss.regularizer = terms.regularizer;

  Eigen::MatrixXd grad_mu_kl, grad_lv_kl;
  if (cfg.variational) {
    // The reconstruction term is a mean over count^2 pairs, so the ELBO's
    // KL sum over nodes is scaled by 1/count^2, i.e. kl_divergence / count.
    const double count = static_cast<double>(sample ? sample->nodes.size() : e.n());
    const double scale = 1.0 / (count * count);
    grad_mu_kl = Eigen::MatrixXd::Zero(e.mu.rows(), e.mu.cols());
    grad_lv_kl = Eigen::MatrixXd::Zero(e.mu.rows(), e.mu.cols());
    double kl = 0.0;
    auto add_node = [&](Eigen::Index i) {
      for (Eigen::Index k = 0; k < e.mu.cols(); ++k) {
        const double mu = e.mu(i, k), lv = e.logvar(i, k);
        kl += 0.5 * (mu * mu + std::exp(lv) - 1.0 - lv);
        grad_mu_kl(i, k) = mu * scale;
        grad_lv_kl(i, k) = 0.5 * (std::exp(lv) - 1.0) * scale;
      }
    };
    if (sample) {
      for (Node i : sample->nodes) add_node(i);
    } else {
      for (Eigen::Index i = 0; i < e.mu.rows(); ++i) add_node(i);
    }
    r.loss.kl = kl * scale;
  }

  // Gradients of the minimized form L = reconstruction + kl - regularizer.
  r.grads = encode_backward(params, op, x, cache, grad_z,
                            cfg.variational ? &grad_mu_kl : nullptr,
                            cfg.variational ? &grad_lv_kl : nullptr);
  const double minimized = r.loss.reconstruction + r.loss.kl - r.loss.regularizer;
  if (cfg.variational) {
    r.loss.total = -minimized;
    r.grads.for_each([](const char*, Eigen::MatrixXd& w) { w = -w; });
  } else {
    r.loss.total = minimized;
  }

  if (!std::isfinite(r.loss.reconstruction)) throw NumericError("non-finite reconstruction loss");
  if (!std::isfinite(r.loss.kl)) throw NumericError("non-finite KL term");
  if (!std::isfinite(r.loss.regularizer)) throw NumericError("non-finite modularity regularizer");
  r.grads.for_each([](const char* name, const Eigen::MatrixXd& w) {
    if (!w.allFinite()) throw NumericError(std::string("non-finite gradient for ") + name);
  });
  return r;
}

}  // namespace modgae
