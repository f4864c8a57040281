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
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "modgae/clustering.hpp"
#include "modgae/evaluation.hpp"
#include "modgae/parallel.hpp"
#include "modgae/protocol.hpp"
#include "modgae/training.hpp"

namespace modgae {

/// Candidate values per hyperparameter; grid points are their Cartesian
/// product with lr varying slowest and s fastest.
struct GridSpec {
  TrainConfig base;
  std::vector<double> lr{0.01};
  std::vector<std::size_t> iterations{200};
  std::vector<double> dropout{0.0};
  std::vector<double> lambda{0.0};
  std::vector<double> beta{0.0};
  std::vector<double> gamma{1.0};
  std::vector<std::size_t> s{1};
  std::size_t runs_per_point = 3;

  std::size_t size() const {
    return lr.size() * iterations.size() * dropout.size() * lambda.size() * beta.size() *
           gamma.size() * s.size();
  }

  void validate() const {
    if (size() == 0) throw std::invalid_argument("every grid list must be non-empty");
    if (runs_per_point == 0) throw std::invalid_argument("runs_per_point must be positive");
  }

  /// Configuration of grid point `index` (mixed-radix decoding).
  TrainConfig point(std::size_t index) const {
    TrainConfig c = base;
    auto take = [&](const auto& list) {
      const auto& v = list[index % list.size()];
      index /= list.size();
      return v;
    };
    c.s = take(s);
    c.gamma = take(gamma);
    c.beta = take(beta);
    c.lambda = take(lambda);
    c.dropout = take(dropout);
    c.iterations = take(iterations);
    c.lr = take(lr);
    return c;
  }
};

/// Candidate lists searched for the published models.
inline GridSpec full_grid(const TrainConfig& base) {
  GridSpec g;
  g.base = base;
  g.lr = {0.001, 0.005, 0.01, 0.05, 0.1, 0.2};
  g.iterations = {100, 200, 300, 400, 500, 600, 700, 800};
  g.dropout = {0.0, 0.1, 0.2};
  g.lambda = {0, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  g.beta = {0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 1.5, 2.0};
  g.gamma = {0.1, 0.2, 0.5, 1.0, 2, 5, 10};
  g.s = {1, 2, 5, 10};
  return g;
}

/// A small sub-grid that finishes on a laptop for graphs of a few thousand nodes.
inline GridSpec desk_grid(const TrainConfig& base) {
  GridSpec g;
  g.base = base;
  g.lr = {0.01};
  g.iterations = {200, 500};
  g.dropout = {0.0};
  g.lambda = {0, 0.25, 0.5};
  g.beta = {0, 0.5, 1.0};
  g.gamma = {0.25, 1.0};
  g.s = {1, 5};
  return g;
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
  TrainConfig base;
  if (j.contains("base")) merge_json(j["base"], base);
  GridSpec g;
  const std::string preset = j.value("preset", std::string{});
  if (preset == "full") {
    g = full_grid(base);
  } else if (preset == "desk") {
    g = desk_grid(base);
  } else if (!preset.empty()) {
    throw std::invalid_argument("unknown grid preset '" + preset + "'");
  } else {
    g.base = base;
    g.lr = {base.lr};
    g.iterations = {base.iterations};
    g.dropout = {base.dropout};
    g.lambda = {base.lambda};
    g.beta = {base.beta};
    g.gamma = {base.gamma};
    g.s = {base.s};
  }
  auto list = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].get<std::remove_reference_t<decltype(field)>>();
  };
  list("lr", g.lr);
  list("iterations", g.iterations);
  list("dropout", g.dropout);
  list("lambda", g.lambda);
  list("beta", g.beta);
  list("gamma", g.gamma);
  list("s", g.s);
  g.runs_per_point = j.value("runs_per_point", g.runs_per_point);
  g.validate();
  return g;
}

struct GridPoint {
  std::size_t index = 0;  // position in the full grid
  TrainConfig config;
  double mean_val_auc = 0.0;
  double mean_modularity = 0.0;
  double criterion = -std::numeric_limits<double>::infinity();
  bool failed = false;
  std::string error;
};

struct GridResult {
  std::vector<GridPoint> points;  // in grid order
  std::size_t best = 0;           // index into `points`

  const GridPoint& best_point() const { return points.at(best); }
};

/// Grid indices evaluated under a budget: evenly strided over the full grid.
inline std::vector<std::size_t> budget_indices(std::size_t total, std::size_t budget) {
  std::vector<std::size_t> idx;
  if (budget == 0 || budget >= total) {
    for (std::size_t i = 0; i < total; ++i) idx.push_back(i);
    return idx;
  }
  for (std::size_t i = 0; i < budget; ++i) idx.push_back(i * total / budget);
  return idx;
}

/// Scores one configuration by mean(validation AUC, modularity of the
/// k-means partition of the final embedding on the train graph).
inline GridPoint score_point(const ValidationSplit& split, const FeatureMatrix& x,
                             std::size_t k, const TrainConfig& config,
                             std::size_t runs) {
  GridPoint p;
  p.config = config;
  try {
    double auc_sum = 0.0, q_sum = 0.0;
    for (std::size_t r = 0; r < runs; ++r) {
      TrainConfig c = config;
      c.seed = derive_seed(config.seed, r);
      const auto run = run_model(split.train_graph, x, c, true);
      auc_sum += validation_auc(split, run.trained.embedding);
      const auto km = kmeans(run.trained.embedding.z, k, kmeans_seed(c.seed));
      q_sum += modularity(split.train_graph, km.partition);
    }
    p.mean_val_auc = auc_sum / static_cast<double>(runs);
    p.mean_modularity = q_sum / static_cast<double>(runs);
    p.criterion = 0.5 * (p.mean_val_auc + p.mean_modularity);
  } catch (const NumericError& e) {
    p.failed = true;
    p.error = e.what();
    p.criterion = -std::numeric_limits<double>::infinity();
  }
  return p;
}

/// Highest criterion; the earliest point wins ties.
inline std::size_t select_best(const std::vector<GridPoint>& points) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < points.size(); ++t) {
    if (points[t].criterion > points[best].criterion) best = t;
  }
  return best;
}

/// Evaluates the grid (or its budgeted subset) and keeps the configuration
/// with the highest criterion, earliest grid position on ties. Only the
/// train graph and validation pairs are visible here.
inline GridResult grid_search(const ValidationSplit& split, const FeatureMatrix& x,
                              std::size_t k, const GridSpec& grid,
                              std::size_t budget = 0, std::size_t jobs = 1) {
  grid.validate();
  const auto indices = budget_indices(grid.size(), budget);
  GridResult result;
  result.points.resize(indices.size());
  parallel_for(indices.size(), jobs, [&](std::size_t t) {
    result.points[t] = score_point(split, x, k, grid.point(indices[t]), grid.runs_per_point);
    result.points[t].index = indices[t];
  });
  result.best = select_best(result.points);
  return result;
}

inline void write_grid_csv(const std::filesystem::path& path, const GridResult& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "index,lr,iterations,dropout,lambda,beta,gamma,s,mean_val_auc,mean_modularity,"
         "criterion,status\n";
  out.precision(17);
  for (const auto& p : r.points) {
    const auto& c = p.config;
    out << p.index << ',' << c.lr << ',' << c.iterations << ',' << c.dropout << ','
        << c.lambda << ',' << c.beta << ',' << c.gamma << ',' << c.s << ','
        << p.mean_val_auc << ',' << p.mean_modularity << ',' << p.criterion << ','
        << (p.failed ? "failed" : "ok") << '\n';
  }
}

}  // namespace modgae
