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
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "modgae/common.hpp"
#include "modgae/prior.hpp"

namespace modgae {

struct KMeansResult {
  Partition partition;
  Eigen::MatrixXd centroids;  // k x d
  double inertia = 0.0;
  std::size_t iterations_used = 0;
};

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iterations = 300;
  double tolerance = 1e-4;  // largest centroid shift at convergence
};

namespace detail {

struct KMeansRun {
  std::vector<std::uint32_t> labels;
  Eigen::MatrixXd centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

// k-means++ seeding by D^2 sampling.
inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& z, std::size_t k, Rng& rng) {
  const auto n = z.rows();
  Eigen::MatrixXd c(static_cast<Eigen::Index>(k), z.cols());
  c.row(0) = z.row(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (z.rowwise() - c.row(0)).rowwise().squaredNorm();
  for (std::size_t t = 1; t < k; ++t) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = uniform01(rng) * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r < 0.0 && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2(pick) == 0.0 && pick > 0) --pick;
    } else {
      pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    }
    c.row(static_cast<Eigen::Index>(t)) = z.row(pick);
    d2 = d2.cwiseMin((z.rowwise() - c.row(static_cast<Eigen::Index>(t))).rowwise().squaredNorm());
  }
  return c;
}

inline void assign(const Eigen::MatrixXd& z, const Eigen::MatrixXd& c,
                   std::vector<std::uint32_t>& labels, Eigen::VectorXd& dist) {
  const auto n = z.rows();
  labels.resize(static_cast<std::size_t>(n));
  dist.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (Eigen::Index j = 0; j < c.rows(); ++j) {
      const double d = (z.row(i) - c.row(j)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    dist(i) = best;
  }
}

inline KMeansRun lloyd(const Eigen::MatrixXd& z, std::size_t k, Rng& rng,
                       const KMeansOptions& opts) {
  KMeansRun run;
  run.centroids = kmeanspp_seed(z, k, rng);
  Eigen::VectorXd dist;
  const auto n = z.rows();
  for (run.iterations = 1; run.iterations <= opts.max_iterations; ++run.iterations) {
    assign(z, run.centroids, run.labels, dist);
    Eigen::MatrixXd next = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), z.cols());
    std::vector<std::size_t> count(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      next.row(run.labels[static_cast<std::size_t>(i)]) += z.row(i);
      ++count[run.labels[static_cast<std::size_t>(i)]];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (count[j] > 0) {
        next.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(count[j]);
        continue;
      }
      // Empty cluster: take over the point farthest from its centroid.
      Eigen::Index far = 0;
      dist.maxCoeff(&far);
      run.labels[static_cast<std::size_t>(far)] = static_cast<std::uint32_t>(j);
      count[j] = 1;
      dist(far) = 0.0;
      next.row(static_cast<Eigen::Index>(j)) = z.row(far);
    }
    const double shift = (next - run.centroids).rowwise().norm().maxCoeff();
    run.centroids = std::move(next);
    if (shift < opts.tolerance) break;
  }
  run.iterations = std::min(run.iterations, opts.max_iterations);
  assign(z, run.centroids, run.labels, dist);
  run.inertia = dist.sum();
  return run;
}

}  // namespace detail

/// k-means with k-means++ seeding; the restart with the lowest inertia wins.
inline KMeansResult kmeans(const Eigen::MatrixXd& z, std::size_t k, std::uint64_t seed,
                           const KMeansOptions& opts = {}) {
  if (k == 0 || k > static_cast<std::size_t>(z.rows())) {
    throw std::invalid_argument("k must lie in [1, n]");
  }
  if (!z.allFinite()) throw NumericError("non-finite embedding passed to k-means");
  detail::KMeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Rng rng(derive_seed(seed, r));
    detail::KMeansRun run = detail::lloyd(z, k, rng, opts);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  KMeansResult out;
  out.partition = Partition::from_labels(best.labels);
  out.centroids.resize(static_cast<Eigen::Index>(out.partition.k()), z.cols());
  for (std::size_t i = 0; i < best.labels.size(); ++i) {
    out.centroids.row(out.partition[i]) = best.centroids.row(best.labels[i]);
  }
  out.inertia = best.inertia;
  out.iterations_used = best.iterations;
  return out;
}

}  // namespace modgae
