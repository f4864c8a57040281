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

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "modgae/model.hpp"
#include "oracles.hpp"

namespace modgae {
namespace {

SparseOperator identity_operator(std::size_t n) {
  SparseOperator op;
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setIdentity();
  return op;
}

TEST(Encode, LinearFeaturelessIdentityPropagation) {
  const auto p = init_params(EncoderKind::linear, false, 5, 0, 3, 1);
  const auto e = encode_eval(p, identity_operator(5), FeatureMatrix::identity(5));
  EXPECT_EQ(e.z, p.w_out);
}

TEST(Encode, LinearMatchesDenseProduct) {
  std::mt19937_64 g(4);
  const Graph graph = oracle::random_graph(12, 0.3, g);
  const auto op = normalized_adjacency(graph);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 6);
  const auto p = init_params(EncoderKind::linear, false, 6, 0, 2, 3);
  const auto e = encode_eval(p, op, FeatureMatrix::dense(x));
  const Eigen::MatrixXd expected = Eigen::MatrixXd(op.matrix) * x * p.w_out;
  EXPECT_LT((e.z - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encode, Gcn2MatchesDenseProduct) {
  std::mt19937_64 g(5);
  const Graph graph = oracle::random_graph(12, 0.3, g);
  const auto op = normalized_adjacency(graph);
  const Eigen::MatrixXd a = Eigen::MatrixXd(op.matrix);
  const auto p = init_params(EncoderKind::gcn2, false, 12, 32, 16, 3);
  const auto e = encode_eval(p, op, FeatureMatrix::identity(12));
  const Eigen::MatrixXd h = (a * p.w0).cwiseMax(0.0);
  EXPECT_LT((e.z - a * h * p.w_out).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(p.w0.cols(), 32);
  EXPECT_EQ(e.z.cols(), 16);
}

TEST(Encode, VariationalEvalModeReturnsMean) {
  auto p = init_params(EncoderKind::linear, true, 6, 0, 2, 9);
  p.w_logvar.setConstant(-1e6);
  const auto op = identity_operator(6);
  const auto e = encode_eval(p, op, FeatureMatrix::identity(6));
  EXPECT_EQ(e.z, e.mu);
  EXPECT_EQ(e.logvar.maxCoeff(), kLogvarMin);
}

TEST(Encode, VariationalTrainModeClampsBeforeExponentiation) {
  auto p = init_params(EncoderKind::linear, true, 4, 0, 2, 9);
  p.w_logvar.setConstant(1e6);
  Rng rng(1);
  const auto e = encode(p, identity_operator(4), FeatureMatrix::identity(4), rng, 0.0, true);
  EXPECT_TRUE(e.z.allFinite());
  EXPECT_EQ(e.logvar.minCoeff(), kLogvarMax);
}

TEST(Encode, EvalModeConsumesNoRandomness) {
  const auto p = init_params(EncoderKind::gcn2, true, 8, 4, 2, 2);
  const auto op = identity_operator(8);
  Rng rng(77), untouched(77);
  encode(p, op, FeatureMatrix::identity(8), rng, 0.5, false);
  EXPECT_EQ(rng(), untouched());
}

TEST(Encode, ReparameterizationReproducibleFromSeed) {
  std::mt19937_64 g(6);
  const auto op = normalized_adjacency(oracle::random_graph(10, 0.3, g));
  for (auto kind : {EncoderKind::linear, EncoderKind::gcn2}) {
    const auto p = init_params(kind, true, 10, 8, 3, 4);
    Rng a(5), b(5);
    const auto za = encode(p, op, FeatureMatrix::identity(10), a, 0.2, true).z;
    const auto zb = encode(p, op, FeatureMatrix::identity(10), b, 0.2, true).z;
    EXPECT_EQ(za, zb);
  }
}

TEST(Encode, LinearIsHomogeneousInWeights) {
  std::mt19937_64 g(7);
  const auto op = normalized_adjacency(oracle::random_graph(15, 0.2, g));
  auto p = init_params(EncoderKind::linear, false, 15, 0, 4, 8);
  const auto z1 = encode_eval(p, op, FeatureMatrix::identity(15)).z;
  p.w_out *= -2.5;
  const auto z2 = encode_eval(p, op, FeatureMatrix::identity(15)).z;
  EXPECT_LT((z2 + 2.5 * z1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Encode, DropoutRescalesSurvivors) {
  const std::size_t n = 400;
  auto p = init_params(EncoderKind::linear, false, 3, 0, 1, 1);
  p.w_out.setOnes();
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(n, 3);
  Rng rng(3);
  const auto e = encode(p, identity_operator(n), FeatureMatrix::dense(x), rng, 0.25, true);
  for (Eigen::Index i = 0; i < e.z.rows(); ++i) {
    const double v = e.z(i, 0) * 0.75;
    EXPECT_NEAR(v, std::round(v), 1e-12);
  }
  EXPECT_NEAR(e.z.mean(), 3.0, 0.15);
}

TEST(Encode, Errors) {
  const auto p = init_params(EncoderKind::linear, false, 5, 0, 2, 1);
  EXPECT_THROW(encode_eval(p, identity_operator(4), FeatureMatrix::identity(4)), DataError);
  EXPECT_THROW(encode_eval(p, identity_operator(6), FeatureMatrix::identity(5)), DataError);
  auto bad = p;
  bad.w_out(0, 0) = std::nan("");
  EXPECT_THROW(encode_eval(bad, identity_operator(5), FeatureMatrix::identity(5)), NumericError);
  Rng rng(0);
  EXPECT_THROW(encode(p, identity_operator(5), FeatureMatrix::identity(5), rng, 1.0, true),
               std::invalid_argument);
}

TEST(DecodePair, Values) {
  Embedding e;
  e.z = Eigen::MatrixXd::Zero(3, 2);
  e.z.row(1) << 2, 0;
  e.z.row(2) << 2, 0;
  EXPECT_DOUBLE_EQ(decode_pair(e, 0, 2), 0.5);
  EXPECT_NEAR(decode_pair(e, 1, 2), 1.0 / (1.0 + std::exp(-4.0)), 1e-15);
  EXPECT_NEAR(decode_pair(e, 1, 2), 0.9820, 1e-4);
  EXPECT_THROW(decode_pair(e, 0, 3), std::out_of_range);
}

TEST(DecodePair, Symmetric) {
  Embedding e;
  e.z = Eigen::MatrixXd::Random(20, 5);
  for (std::size_t i = 0; i < 20; ++i) {
    for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(decode_pair(e, i, j), decode_pair(e, j, i));
  }
}

TEST(InitParams, DeterministicAndBounded) {
  const auto a = init_params(EncoderKind::linear, false, 4, 0, 2, 7);
  const auto b = init_params(EncoderKind::linear, false, 4, 0, 2, 7);
  EXPECT_EQ(a.w_out, b.w_out);
  EXPECT_LE(a.w_out.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 6.0));
  EXPECT_NE(a.w_out, init_params(EncoderKind::linear, false, 4, 0, 2, 8).w_out);

  const auto g = init_params(EncoderKind::gcn2, true, 30, 10, 3, 1);
  EXPECT_LE(g.w0.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 40.0));
  EXPECT_LE(g.w_mu.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 13.0));
  EXPECT_EQ(g.w_out.size(), 0);
  EXPECT_EQ(g.w_logvar.rows(), 10);
}

TEST(InitParams, MeanVanishesAtScale) {
  const auto p = init_params(EncoderKind::linear, false, 1000, 0, 1000, 11);
  EXPECT_LT(std::abs(p.w_out.mean()), 0.05);
}

TEST(Checkpoint, ParamsAndEmbeddingRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "modgae_model_test";
  std::filesystem::remove_all(dir);
  for (auto kind : {EncoderKind::linear, EncoderKind::gcn2}) {
    for (bool variational : {false, true}) {
      const auto p = init_params(kind, variational, 7, 5, 3, 12);
      save_params(dir, p);
      const auto q = load_params(dir);
      EXPECT_EQ(q.kind, p.kind);
      EXPECT_EQ(q.variational, p.variational);
      EXPECT_EQ(q.w0, p.w0);
      EXPECT_EQ(q.w_out, p.w_out);
      EXPECT_EQ(q.w_mu, p.w_mu);
      EXPECT_EQ(q.w_logvar, p.w_logvar);
      std::filesystem::remove_all(dir);
    }
  }
  std::filesystem::create_directories(dir);
  Embedding e;
  e.z = Eigen::MatrixXd::Random(6, 3);
  write_embedding_csv(dir / "z.csv", e);
  EXPECT_EQ(read_embedding_csv(dir / "z.csv").z, e.z);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace modgae
