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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modgae/common.hpp"
#include "modgae/graph.hpp"
#include "modgae/model.hpp"
#include "modgae/objective.hpp"
#include "modgae/prior.hpp"

namespace modgae {

/// Every hyperparameter of one training run.
struct TrainConfig {
  EncoderKind encoder = EncoderKind::linear;
  bool variational = false;
  std::size_t dim = 16;
  std::size_t hidden = 32;
  double lambda = 0.0;
  double beta = 0.0;
  double gamma = 1.0;
  std::size_t s = 1;
  double lr = 0.01;
  std::size_t iterations = 200;
  double dropout = 0.0;
  std::optional<std::size_t> fastgae_size;
  std::uint64_t seed = 0;
  double clip = 0.0;  // global gradient-norm clip, 0 disables

  ObjectiveConfig objective() const { return {variational, beta, gamma, dropout}; }

  /// The same model without prior doping or regularizer.
  TrainConfig standard() const {
    TrainConfig c = *this;
    c.lambda = 0.0;
    c.beta = 0.0;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"model", c.variational ? "vgae" : "gae"},
       {"encoder", to_string(c.encoder)},
       {"dim", c.dim},
       {"hidden", c.hidden},
       {"lambda", c.lambda},
       {"beta", c.beta},
       {"gamma", c.gamma},
       {"s", c.s},
       {"lr", c.lr},
       {"iterations", c.iterations},
       {"dropout", c.dropout},
       {"seed", c.seed},
       {"clip", c.clip}};
  j["fastgae"] = c.fastgae_size ? nlohmann::json(*c.fastgae_size) : nlohmann::json();
}

/// Reads the keys present in `j` over the values already in `c`.
inline void merge_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("model")) {
    const auto m = j["model"].get<std::string>();
    if (m != "gae" && m != "vgae") throw std::invalid_argument("model must be gae or vgae");
    c.variational = m == "vgae";
  }
  if (j.contains("encoder")) c.encoder = parse_encoder(j["encoder"].get<std::string>());
  if (j.contains("dim")) c.dim = j["dim"].get<std::size_t>();
  if (j.contains("hidden")) c.hidden = j["hidden"].get<std::size_t>();
  if (j.contains("lambda")) c.lambda = j["lambda"].get<double>();
  if (j.contains("beta")) c.beta = j["beta"].get<double>();
  if (j.contains("gamma")) c.gamma = j["gamma"].get<double>();
  if (j.contains("s")) c.s = j["s"].get<std::size_t>();
  if (j.contains("lr")) c.lr = j["lr"].get<double>();
  if (j.contains("iterations")) c.iterations = j["iterations"].get<std::size_t>();
  if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("clip")) c.clip = j["clip"].get<double>();
  if (j.contains("fastgae")) {
    c.fastgae_size = j["fastgae"].is_null()
                         ? std::nullopt
                         : std::optional<std::size_t>(j["fastgae"].get<std::size_t>());
  }
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  merge_json(j, c);
}

/// Tuned hyperparameters per benchmark, paired with the encoder/model
/// variant reported best on that graph.
inline std::optional<TrainConfig> table1_preset(const std::string& name) {
  auto make = [](EncoderKind enc, bool vgae, double lr, std::size_t iters,
                 std::optional<std::size_t> fast, double lambda, double beta,
                 double gamma, std::size_t s) {
    TrainConfig c;
    c.encoder = enc;
    c.variational = vgae;
    c.lr = lr;
    c.iterations = iters;
    c.fastgae_size = fast;
    c.lambda = lambda;
    c.beta = beta;
    c.gamma = gamma;
    c.s = s;
    return c;
  };
  using E = EncoderKind;
  if (name == "blogs") return make(E::gcn2, true, 0.01, 200, {}, 0.5, 0.75, 2, 10);
  if (name == "cora-featureless") return make(E::linear, false, 0.01, 500, {}, 0.25, 1.0, 0.25, 1);
  if (name == "cora-features") return make(E::linear, true, 0.01, 300, {}, 0.001, 0.01, 1, 1);
  if (name == "citeseer-featureless") return make(E::linear, true, 0.01, 500, {}, 0.75, 0.5, 0.5, 2);
  if (name == "citeseer-features") return make(E::linear, true, 0.01, 500, {}, 0.75, 0.5, 0.5, 2);
  if (name == "pubmed-featureless") return make(E::linear, false, 0.01, 500, {}, 0.1, 0.5, 0.1, 5);
  if (name == "pubmed-features") return make(E::linear, true, 0.01, 700, {}, 0.1, 0.5, 10, 2);
  if (name == "cora-large") return make(E::linear, true, 0.01, 500, {}, 0.001, 0.1, 0.1, 10);
  if (name == "sbm") return make(E::linear, true, 0.01, 300, 10000, 0.5, 0.1, 2, 10);
  if (name == "album") return make(E::gcn2, true, 0.005, 600, 10000, 0.25, 0.25, 1, 5);
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Adam

enum class Direction { descent, ascent };

struct AdamState {
  static constexpr double beta1 = 0.9;
  static constexpr double beta2 = 0.999;
  static constexpr double epsilon = 1e-8;

  ModelParams first;
  ModelParams second;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ModelParams& p) {
    AdamState s;
    s.first = p;
    s.first.for_each([](const char*, Eigen::MatrixXd& w) { w.setZero(); });
    s.second = s.first;
    return s;
  }
};

/// Bias-corrected Adam update; ascent moves along the gradient.
inline void adam_step(ModelParams& params, const ParamGrads& grads,
                      AdamState& state, double lr, Direction direction) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(AdamState::beta1, t);
  const double c2 = 1.0 - std::pow(AdamState::beta2, t);
  const double sign = direction == Direction::descent ? -1.0 : 1.0;

  struct Slot {
    Eigen::MatrixXd* w;
    const Eigen::MatrixXd* g;
    Eigen::MatrixXd* m;
    Eigen::MatrixXd* v;
  };
  std::vector<Slot> slots;
  params.for_each([&](const char*, Eigen::MatrixXd& w) { slots.push_back({&w, nullptr, nullptr, nullptr}); });
  std::size_t k = 0;
  grads.for_each([&](const char*, const Eigen::MatrixXd& g) { slots.at(k++).g = &g; });
  k = 0;
  state.first.for_each([&](const char*, Eigen::MatrixXd& m) { slots.at(k++).m = &m; });
  k = 0;
  state.second.for_each([&](const char*, Eigen::MatrixXd& v) { slots.at(k++).v = &v; });

  std::vector<Eigen::MatrixXd> updates;
  for (auto& s : slots) {
    if (s.g->rows() != s.w->rows() || s.g->cols() != s.w->cols()) {
      throw DataError("gradient shape does not match parameter shape");
    }
    *s.m = AdamState::beta1 * *s.m + (1.0 - AdamState::beta1) * *s.g;
    *s.v = AdamState::beta2 * *s.v + (1.0 - AdamState::beta2) * s.g->cwiseProduct(*s.g);
    Eigen::MatrixXd delta =
        lr * ((*s.m / c1).array() / ((*s.v / c2).array().sqrt() + AdamState::epsilon)).matrix();
    if (!delta.allFinite()) throw NumericError("non-finite Adam update");
    updates.push_back(std::move(delta));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) *slots[i].w += sign * updates[i];
}

// ---------------------------------------------------------------------------
// Training loop

struct TelemetryRecord {
  std::size_t iter = 0;
  LossBreakdown loss;
  double wall_seconds = 0.0;
};

inline nlohmann::json to_json(const TelemetryRecord& r, bool with_wall = true) {
  nlohmann::json j = {{"iter", r.iter},
                      {"recon", r.loss.reconstruction},
                      {"kl", r.loss.kl},
                      {"reg", r.loss.regularizer},
                      {"total", r.loss.total}};
  if (with_wall) j["wall"] = r.wall_seconds;
  return j;
}

struct TrainResult {
  ModelParams params;
  Embedding embedding;
  std::vector<TelemetryRecord> telemetry;
};

/// Raised when the objective diverges; carries the last finite parameters.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::size_t iteration, ModelParams last)
      : NumericError(what + " at iteration " + std::to_string(iteration)),
        iteration_(iteration),
        last_finite_(std::move(last)) {}

  std::size_t iteration() const { return iteration_; }
  const ModelParams& last_finite() const { return last_finite_; }

 private:
  std::size_t iteration_;
  ModelParams last_finite_;
};

inline constexpr std::size_t kTelemetryInterval = 10;

/// Gradient of the signed total objective for one train-mode pass.
inline ObjectiveResult gradients(const ModelParams& params, const SparseOperator& op,
                                 const FeatureMatrix& x, const Graph& g,
                                 const TrainConfig& config, Rng& rng,
                                 const SubgraphSample* sample = nullptr) {
  return objective_gradients(params, op, x, g, config.objective(), rng, sample);
}

/// Trains an encoder on `g`. With a prior the encoder propagates over the
/// fused operator A + lambda A_s; without one, over A alone. Randomness is
/// drawn from named sub-streams of `config.seed`.
inline TrainResult train(const Graph& g, const FeatureMatrix& x,
                         const PriorOperator* prior, const TrainConfig& config,
                         const std::function<void(const TelemetryRecord&)>& on_record = {}) {
  if (x.rows != g.n()) throw DataError("feature rows do not match graph size");
  if (prior && prior->n != g.n()) throw DataError("prior operator does not match graph size");
  if (config.fastgae_size && *config.fastgae_size > g.n()) {
    throw std::invalid_argument("FastGAE subgraph size exceeds node count");
  }
  if (config.iterations == 0) throw std::invalid_argument("iterations must be positive");

  const SparseOperator op = prior ? fused_operator(g, *prior) : normalized_adjacency(g);
  TrainResult result;
  result.params = init_params(config.encoder, config.variational, x.cols, config.hidden,
                              config.dim, derive_seed(config.seed, fnv1a64("init")));
  AdamState adam = AdamState::zeros_like(result.params);
  Rng noise = named_stream(config.seed, "dropout");
  Rng sampling = named_stream(config.seed, "sampling");
  const Direction direction = config.variational ? Direction::ascent : Direction::descent;
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::optional<SubgraphSample> sample;
    if (config.fastgae_size) sample = fastgae_sample(g, *config.fastgae_size, sampling);
    ObjectiveResult step;
    try {
      step = gradients(result.params, op, x, g, config, noise, sample ? &*sample : nullptr);
      if (config.clip > 0.0) {
        double sq = 0.0;
        step.grads.for_each([&](const char*, const Eigen::MatrixXd& w) { sq += w.squaredNorm(); });
        const double norm = std::sqrt(sq);
        if (norm > config.clip) {
          step.grads.for_each([&](const char*, Eigen::MatrixXd& w) { w *= config.clip / norm; });
        }
      }
      if (it % kTelemetryInterval == 0 || it + 1 == config.iterations) {
        TelemetryRecord rec{it, step.loss,
                            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
        result.telemetry.push_back(rec);
        if (on_record) on_record(rec);
      }
      ModelParams next = result.params;
      adam_step(next, step.grads, adam, config.lr, direction);
      result.params = std::move(next);
    } catch (const NumericError& e) {
      throw DivergenceError(e.what(), it, result.params);
    }
  }
  result.embedding = encode_eval(result.params, op, x);
  return result;
}

inline void write_telemetry(const std::filesystem::path& path,
                            const std::vector<TelemetryRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace modgae
