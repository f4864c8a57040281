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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "modgae/common.hpp"
#include "modgae/graph.hpp"

namespace modgae {

enum class EncoderKind { linear, gcn2 };

inline const char* to_string(EncoderKind k) {
  return k == EncoderKind::linear ? "linear" : "gcn";
}

inline EncoderKind parse_encoder(const std::string& s) {
  if (s == "linear") return EncoderKind::linear;
  if (s == "gcn" || s == "gcn2") return EncoderKind::gcn2;
  throw std::invalid_argument("unknown encoder '" + s + "' (linear|gcn)");
}

/// Encoder weights. Deterministic models populate `w_out`; variational ones
/// populate `w_mu` and `w_logvar` instead. `w0` is the shared first GCN layer.
struct ModelParams {
  EncoderKind kind = EncoderKind::linear;
  bool variational = false;
  std::uint64_t seed = 0;
  Eigen::MatrixXd w0;
  Eigen::MatrixXd w_out;
  Eigen::MatrixXd w_mu;
  Eigen::MatrixXd w_logvar;

  /// Every populated matrix, in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    if (kind == EncoderKind::gcn2) f("w0", w0);
    if (variational) {
      f("w_mu", w_mu);
      f("w_logvar", w_logvar);
    } else {
      f("w_out", w_out);
    }
  }
  template <typename F>
  void for_each(F&& f) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const char* name, Eigen::MatrixXd& m) { f(name, std::as_const(m)); });
  }

  std::size_t embedding_dim() const {
    return static_cast<std::size_t>(variational ? w_mu.cols() : w_out.cols());
  }
};

struct Embedding {
  Eigen::MatrixXd z;
  Eigen::MatrixXd mu;      // variational only
  Eigen::MatrixXd logvar;  // variational only, clamped

  bool variational() const { return mu.size() > 0; }
  std::size_t n() const { return static_cast<std::size_t>(z.rows()); }
};

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

inline void glorot_uniform(Eigen::MatrixXd& w, std::size_t fan_in,
                           std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  w.resize(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      w(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
}

inline ModelParams init_params(EncoderKind kind, bool variational,
                               std::size_t f, std::size_t h, std::size_t d,
                               std::uint64_t seed) {
  if (f == 0 || d == 0 || (kind == EncoderKind::gcn2 && h == 0)) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
  ModelParams p;
  p.kind = kind;
  p.variational = variational;
  p.seed = seed;
  Rng rng(splitmix64(seed));
  const std::size_t head_in = kind == EncoderKind::gcn2 ? h : f;
  if (kind == EncoderKind::gcn2) glorot_uniform(p.w0, f, h, rng);
  if (variational) {
    glorot_uniform(p.w_mu, head_in, d, rng);
    glorot_uniform(p.w_logvar, head_in, d, rng);
  } else {
    glorot_uniform(p.w_out, head_in, d, rng);
  }
  return p;
}

/// Standard normal draw via Box-Muller on the portable uniform.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardCache {
  double dropout = 0.0;
  Eigen::MatrixXd input_mask;   // n x f (n x 1 when featureless); empty if unused
  Eigen::MatrixXd hidden_pre;   // gcn2: A (X W0)
  Eigen::MatrixXd hidden;       // gcn2: relu(hidden_pre), after dropout
  Eigen::MatrixXd hidden_mask;  // gcn2 dropout mask, empty if unused
  Eigen::MatrixXd eps;          // variational train mode only
  Eigen::MatrixXd logvar_raw;   // before clamping
  Embedding embedding;
};

namespace detail {

// Inverted dropout mask: 0 with probability `rate`, 1/(1-rate) otherwise.
inline Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols,
                                    double rate, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double keep = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      m(r, c) = uniform01(rng) < rate ? 0.0 : keep;
    }
  }
  return m;
}

// (X ⊙ mask) W without materializing the identity in featureless mode.
inline Eigen::MatrixXd features_times(const FeatureMatrix& x,
                                      const Eigen::MatrixXd& mask,
                                      const Eigen::MatrixXd& w) {
  if (x.is_identity) {
    if (mask.size() == 0) return w;
    return mask.col(0).asDiagonal() * w;
  }
  if (mask.size() == 0) return x.values * w;
  return x.values.cwiseProduct(mask) * w;
}

// (X ⊙ mask)^T G.
inline Eigen::MatrixXd features_transpose_times(const FeatureMatrix& x,
                                                const Eigen::MatrixXd& mask,
                                                const Eigen::MatrixXd& g) {
  if (x.is_identity) {
    if (mask.size() == 0) return g;
    return mask.col(0).asDiagonal() * g;
  }
  if (mask.size() == 0) return x.values.transpose() * g;
  return x.values.cwiseProduct(mask).transpose() * g;
}

inline void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite values in ") + what);
  }
}

}  // namespace detail

inline void check_shapes(const ModelParams& p, const SparseOperator& op,
                         const FeatureMatrix& x) {
  if (op.n() != x.rows) {
    throw DataError("operator has " + std::to_string(op.n()) +
                    " rows, features have " + std::to_string(x.rows));
  }
  const auto f = static_cast<Eigen::Index>(x.cols);
  auto head_rows = f;
  if (p.kind == EncoderKind::gcn2) {
    if (p.w0.rows() != f) throw DataError("W0 rows do not match feature count");
    head_rows = p.w0.cols();
  }
  if (p.variational) {
    if (p.w_mu.rows() != head_rows || p.w_logvar.rows() != head_rows ||
        p.w_mu.cols() != p.w_logvar.cols()) {
      throw DataError("variational head shapes are inconsistent");
    }
  } else if (p.w_out.rows() != head_rows) {
    throw DataError("output weight rows do not match encoder input");
  }
}

/// Forward pass. Randomness (dropout masks, then reparameterization noise)
/// is drawn from `rng` only in train mode.
inline ForwardCache encode_with_cache(const ModelParams& p,
                                      const SparseOperator& op,
                                      const FeatureMatrix& x, Rng& rng,
                                      double dropout, bool train_mode) {
  check_shapes(p, op, x);
  p.for_each([](const char* name, const Eigen::MatrixXd& w) {
    detail::require_finite(w, name);
  });
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
  ForwardCache c;
  const bool drop = train_mode && dropout > 0.0;
  c.dropout = drop ? dropout : 0.0;
  const auto n = static_cast<Eigen::Index>(x.rows);
  if (drop) {
    c.input_mask = detail::dropout_mask(
        n, x.is_identity ? 1 : static_cast<Eigen::Index>(x.cols), dropout, rng);
  }

  // Output head: A (X W) for the linear encoder, A (H W) for gcn2.
  auto heads = [&](const Eigen::MatrixXd& w) -> Eigen::MatrixXd {
    if (p.kind == EncoderKind::linear) {
      return op.matrix * detail::features_times(x, c.input_mask, w);
    }
    return op.matrix * (c.hidden * w);
  };

  if (p.kind == EncoderKind::gcn2) {
    c.hidden_pre = op.matrix * detail::features_times(x, c.input_mask, p.w0);
    c.hidden = c.hidden_pre.cwiseMax(0.0);
    if (drop) {
      c.hidden_mask =
          detail::dropout_mask(c.hidden.rows(), c.hidden.cols(), dropout, rng);
      c.hidden = c.hidden.cwiseProduct(c.hidden_mask);
    }
  }

  Embedding& e = c.embedding;
  if (!p.variational) {
    e.z = heads(p.w_out);
    return c;
  }
  e.mu = heads(p.w_mu);
  c.logvar_raw = heads(p.w_logvar);
  e.logvar = c.logvar_raw.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax);
  if (train_mode) {
    c.eps.resize(e.mu.rows(), e.mu.cols());
    for (Eigen::Index col = 0; col < c.eps.cols(); ++col) {
      for (Eigen::Index r = 0; r < c.eps.rows(); ++r) {
        c.eps(r, col) = standard_normal(rng);
      }
    }
    e.z = e.mu + (0.5 * e.logvar.array()).exp().matrix().cwiseProduct(c.eps);
  } else {
    e.z = e.mu;
  }
  return c;
}

inline Embedding encode(const ModelParams& p, const SparseOperator& op,
                        const FeatureMatrix& x, Rng& rng, double dropout,
                        bool train_mode) {
  return encode_with_cache(p, op, x, rng, dropout, train_mode).embedding;
}

/// Eval-mode embedding (means for variational models); consumes no randomness.
inline Embedding encode_eval(const ModelParams& p, const SparseOperator& op,
                             const FeatureMatrix& x) {
  Rng unused(0);
  return encode(p, op, x, unused, 0.0, false);
}

/// Gradient with respect to each weight matrix, shaped like ModelParams.
using ParamGrads = ModelParams;

/// Reverse pass through the encoder. `grad_z` is dL/dZ; for variational
/// models `grad_mu_extra` / `grad_logvar_extra` add direct dependencies of
/// the loss on mu and (clamped) logvar, e.g. the KL term.
inline ParamGrads encode_backward(const ModelParams& p, const SparseOperator& op,
                                  const FeatureMatrix& x, const ForwardCache& c,
                                  const Eigen::MatrixXd& grad_z,
                                  const Eigen::MatrixXd* grad_mu_extra = nullptr,
                                  const Eigen::MatrixXd* grad_logvar_extra = nullptr) {
  ParamGrads g;
  g.kind = p.kind;
  g.variational = p.variational;
  g.seed = p.seed;

  // Gradients with respect to the pre-propagation head outputs; the operator
  // is symmetric so its transpose is itself.
  Eigen::MatrixXd grad_hidden;
  auto head_backward = [&](const Eigen::MatrixXd& grad_out, Eigen::MatrixXd& gw,
                           const Eigen::MatrixXd& w) {
    const Eigen::MatrixXd grad_pre = op.matrix * grad_out;
    if (p.kind == EncoderKind::linear) {
      gw = detail::features_transpose_times(x, c.input_mask, grad_pre);
    } else {
      gw = c.hidden.transpose() * grad_pre;
      if (grad_hidden.size() == 0) {
        grad_hidden = grad_pre * w.transpose();
      } else {
        grad_hidden += grad_pre * w.transpose();
      }
    }
  };

  if (!p.variational) {
    head_backward(grad_z, g.w_out, p.w_out);
  } else {
    const Embedding& e = c.embedding;
    Eigen::MatrixXd grad_mu = grad_z;
    Eigen::MatrixXd grad_lv = Eigen::MatrixXd::Zero(e.mu.rows(), e.mu.cols());
    if (c.eps.size() > 0) {
      grad_lv = grad_z.cwiseProduct(c.eps).cwiseProduct(
          (0.5 * e.logvar.array()).exp().matrix()) * 0.5;
    }
    if (grad_mu_extra) grad_mu += *grad_mu_extra;
    if (grad_logvar_extra) grad_lv += *grad_logvar_extra;
    for (Eigen::Index col = 0; col < grad_lv.cols(); ++col) {
      for (Eigen::Index r = 0; r < grad_lv.rows(); ++r) {
        const double raw = c.logvar_raw(r, col);
        if (raw < kLogvarMin || raw > kLogvarMax) grad_lv(r, col) = 0.0;
      }
    }
    head_backward(grad_mu, g.w_mu, p.w_mu);
    head_backward(grad_lv, g.w_logvar, p.w_logvar);
  }

  if (p.kind == EncoderKind::gcn2) {
    if (c.hidden_mask.size() > 0) grad_hidden = grad_hidden.cwiseProduct(c.hidden_mask);
    for (Eigen::Index col = 0; col < grad_hidden.cols(); ++col) {
      for (Eigen::Index r = 0; r < grad_hidden.rows(); ++r) {
        if (c.hidden_pre(r, col) <= 0.0) grad_hidden(r, col) = 0.0;
      }
    }
    const Eigen::MatrixXd grad_pre0 = op.matrix * grad_hidden;
    g.w0 = detail::features_transpose_times(x, c.input_mask, grad_pre0);
  }
  return g;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Inner-product decoder sigma(z_i . z_j).
inline double decode_pair(const Embedding& e, std::size_t i, std::size_t j) {
  if (i >= e.n() || j >= e.n()) throw std::out_of_range("node id out of range");
  return sigmoid(e.z.row(static_cast<Eigen::Index>(i))
                     .dot(e.z.row(static_cast<Eigen::Index>(j))));
}

// ---------------------------------------------------------------------------
// Matrix CSV and checkpoints

inline void write_matrix_csv(const std::filesystem::path& path,
                             const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[32];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      if (c) out << ',';
      out << buf;
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  FeatureMatrix f = load_features_csv(path);
  return std::move(f.values);
}

inline void write_embedding_csv(const std::filesystem::path& path,
                                const Embedding& e) {
  write_matrix_csv(path, e.z);
}

inline Embedding read_embedding_csv(const std::filesystem::path& path) {
  return {read_matrix_csv(path), {}, {}};
}

/// Writes `dir/manifest.json` plus one CSV per weight matrix.
inline void save_params(const std::filesystem::path& dir, const ModelParams& p) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["kind"] = to_string(p.kind);
  manifest["variational"] = p.variational;
  manifest["seed"] = p.seed;
  p.for_each([&](const char* name, const Eigen::MatrixXd& w) {
    const std::string file = std::string(name) + ".csv";
    write_matrix_csv(dir / file, w);
    manifest["matrices"][name] = {
        {"rows", w.rows()}, {"cols", w.cols()}, {"file", file}};
  });
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

inline ModelParams load_params(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataError("no checkpoint manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  ModelParams p;
  p.kind = parse_encoder(manifest.at("kind").get<std::string>());
  p.variational = manifest.at("variational").get<bool>();
  p.seed = manifest.value("seed", std::uint64_t{0});
  p.for_each([&](const char* name, Eigen::MatrixXd& w) {
    const auto& entry = manifest.at("matrices").at(name);
    w = read_matrix_csv(dir / entry.at("file").get<std::string>());
    if (w.rows() != entry.at("rows").get<Eigen::Index>() ||
        w.cols() != entry.at("cols").get<Eigen::Index>()) {
      throw DataError(std::string("checkpoint matrix ") + name +
                      " does not match its manifest shape");
    }
  });
  return p;
}

}  // namespace modgae
