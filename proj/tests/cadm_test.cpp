// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "adnt/cadm.hpp"
#include "adnt/errors.hpp"
#include "adnt/gradcheck.hpp"
#include "test_support.hpp"

namespace adnt {
namespace {

using testing::expect_matrix_near;

CadmWeights identity_weights(std::size_t d) {
  Matrix kv(d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    kv(i, i) = 1.0;
    kv(i, d + i) = 1.0;
  }
  Matrix w1(2 * d, d);
  for (std::size_t i = 0; i < d; ++i) w1(i, i) = 1.0;
  return {Tensor(Matrix::identity(d)), Tensor(kv),
          {Tensor(w1), Tensor(Matrix(1, d)), Tensor(Matrix::identity(d)), Tensor(Matrix(1, d))}};
}

TEST(DomainPrototype, MeanOfRows) {
  EXPECT_EQ(domain_prototype(Tensor(Matrix::from_rows({{1, 1}, {3, 3}}))).value(), Matrix::from_rows({{2, 2}}));
}

TEST(DomainPrototype, SingleRowIsItself) {
  const Matrix row = Matrix::from_rows({{0.25, -4}});
  EXPECT_EQ(domain_prototype(Tensor(row)).value(), row);
}

TEST(DomainPrototype, GradientIsOneOverRows) {
  Tape tape;
  Tensor block = tape.variable(Matrix(4, 3, 1.5));
  tape.backward(sum(domain_prototype(block)));
  expect_matrix_near(block.grad(), Matrix(4, 3, 0.25), 1e-15);
}

TEST(ProjectQkv, IdentityProjections) {
  const Matrix protos = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  const Matrix feats = Matrix::from_rows({{1, 0}, {0, 1}, {2, 2}, {3, 1}, {0, 0}, {1, 1}});
  const QkvProjection qkv = project_qkv(Tensor(protos), Tensor(feats), identity_weights(2));
  EXPECT_EQ(qkv.queries.value(), protos);
  EXPECT_EQ(qkv.keys.value(), feats);
  EXPECT_EQ(qkv.values.value(), feats);
}

TEST(ProjectQkv, Shapes) {
  std::mt19937_64 rng(2);
  Rng init(5);
  const CadmParams p = CadmParams::init(4, init);
  const QkvProjection qkv = project_qkv(Tensor(testing::random_matrix(rng, 3, 4)),
                                        Tensor(testing::random_matrix(rng, 9, 4)), p.constants());
  EXPECT_EQ(shape_string(qkv.queries.value()), "3x4");
  EXPECT_EQ(shape_string(qkv.keys.value()), "9x4");
  EXPECT_EQ(shape_string(qkv.values.value()), "9x4");
}

TEST(AttentionMap, EqualKeysGiveUniformRow) {
  const Matrix a = attention_map(Tensor(Matrix::from_rows({{0.3, -1, 2}})), Tensor(Matrix(5, 3, 0.7))).value();
  expect_matrix_near(a, Matrix(1, 5, 0.2), 1e-15);
}

TEST(AttentionMap, MassConcentratesOnAlignedKey) {
  const Matrix keys = Matrix::from_rows({{0, 1, 0}, {50, 0, 0}, {0, 0, 1}});
  const Matrix a = attention_map(Tensor(Matrix::from_rows({{1, 0, 0}})), Tensor(keys)).value();
  EXPECT_EQ(argmax_rows(a)[0], 1u);
  EXPECT_GT(a(0, 1), 0.99);
}

TEST(AttentionMap, HandEvaluatedCase) {
  // D = 4: softmax([1/2, 0]).
  const Matrix keys = Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}});
  const Matrix a = attention_map(Tensor(Matrix::from_rows({{1, 0, 0, 0}})), Tensor(keys)).value();
  expect_matrix_near(a, Matrix::from_rows({{0.62246, 0.37754}}), 1e-4);
}

TEST(ContraryAttention, UniformIsFixedPoint) {
  expect_matrix_near(contrary_attention(Tensor(Matrix(2, 4, 0.25))).value(), Matrix(2, 4, 0.25), 1e-15);
}

TEST(ContraryAttention, HandEvaluatedCase) {
  expect_matrix_near(contrary_attention(Tensor(Matrix::from_rows({{0.7, 0.2, 0.1}}))).value(),
                     Matrix::from_rows({{0.15, 0.40, 0.45}}), 1e-12);
}

TEST(ContraryAttention, OneHotFullyReverses) {
  EXPECT_EQ(contrary_attention(Tensor(Matrix::from_rows({{1, 0}}))).value(), Matrix::from_rows({{0, 1}}));
}

TEST(ContraryAttention, NeedsTwoColumns) {
  EXPECT_THROW(contrary_attention(Tensor(Matrix(1, 1, 1.0))), Error);
}

TEST(StyleCentroid, IdenticalValuesGiveThatRow) {
  const Matrix v = Matrix::from_rows({{1, 2}, {1, 2}, {1, 2}});
  expect_matrix_near(style_centroid(Tensor(Matrix::from_rows({{0.2, 0.3, 0.5}})), Tensor(v)).value(),
                     Matrix::from_rows({{1, 2}}), 1e-15);
}

TEST(StyleCentroid, OneHotSelectsRow) {
  const Matrix v = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  EXPECT_EQ(style_centroid(Tensor(Matrix::from_rows({{0, 1, 0}})), Tensor(v)).value(), Matrix::from_rows({{3, 4}}));
}

TEST(StyleCentroid, Midpoint) {
  EXPECT_EQ(style_centroid(Tensor(Matrix::from_rows({{0.5, 0.5}})), Tensor(Matrix::from_rows({{0, 2}, {2, 0}})))
                .value(),
            Matrix::from_rows({{1, 1}}));
}

TEST(CentroidBank, AlphaOneReplaces) {
  CentroidBank bank(1, 1.0);
  bank.set(0, Matrix::from_rows({{9, 9}}));
  EXPECT_EQ(bank.ema_update(0, Tensor(Matrix::from_rows({{1, 2}}))).value(), Matrix::from_rows({{1, 2}}));
}

TEST(CentroidBank, ScalarEma) {
  CentroidBank bank(1, 0.05);
  bank.set(0, Matrix(1, 1, 0.0));
  EXPECT_NEAR(bank.ema_update(0, Tensor(Matrix(1, 1, 1.0))).item(), 0.05, 1e-15);
  EXPECT_NEAR(bank.centroid(0)(0, 0), 0.05, 1e-15);
}

TEST(CentroidBank, FirstCallSeedsHistory) {
  CentroidBank bank(2, 0.05);
  EXPECT_FALSE(bank.initialized(1));
  EXPECT_THROW(bank.centroid(1), ContractError);
  testing::expect_matrix_near(bank.ema_update(1, Tensor(Matrix::from_rows({{3, -1}}))).value(),
                              Matrix::from_rows({{3, -1}}), 1e-15);
  EXPECT_TRUE(bank.initialized(1));
}

TEST(CentroidBank, GradientIsAlpha) {
  CentroidBank bank(1, 0.05);
  bank.set(0, Matrix(1, 3, 2.0));
  Tape tape;
  Tensor phi = tape.variable(Matrix::from_rows({{1, 2, 3}}));
  tape.backward(sum(bank.ema_update(0, phi)));
  expect_matrix_near(phi.grad(), Matrix(1, 3, 0.05), 1e-15);
}

TEST(Fuse, ZeroNetworkGivesZero) {
  const MlpWeights zero{Tensor(Matrix(4, 3)), Tensor(Matrix(1, 3)), Tensor(Matrix(3, 2)), Tensor(Matrix(1, 2))};
  EXPECT_EQ(fuse(Tensor(Matrix(5, 2, 1.0)), Tensor(Matrix(1, 2, 1.0)), zero).value(), Matrix(5, 2));
}

TEST(Fuse, ConstructedPassThrough) {
  const Matrix f = Matrix::from_rows({{0.5, 2}, {0, 1}, {3, 0.25}});
  const CadmWeights w = identity_weights(2);
  EXPECT_EQ(fuse(Tensor(f), Tensor(Matrix::from_rows({{7, -3}})), w.mlp).value(), f);
}

TEST(Fuse, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  Rng init(8);
  const MlpParams mlp = MlpParams::init(6, 5, 3, init);
  const std::vector<gradcheck::Input> inputs = {{testing::random_matrix(rng, 4, 3)}, {testing::random_matrix(rng, 1, 3)},
                                                {mlp.w1}, {mlp.b1}, {mlp.w2}, {mlp.b2}};
  const Matrix weights = testing::random_matrix(rng, 4, 3);
  const auto fn = [&weights](std::span<const Tensor> in) {
    return sum(mul(fuse(in[0], in[1], {in[2], in[3], in[4], in[5]}), Tensor(weights)));
  };
  EXPECT_LT(gradcheck::max_relative_error(fn, inputs), 1e-4);
}

TEST(ResidualFusionInit, PassesNonnegativeFeaturesThroughWithZeroCentroid) {
  Rng init(3);
  CadmParams p = CadmParams::init(3, init);
  p.residual_fusion_init(0.1);
  const Matrix f = Matrix::from_rows({{0.5, 0, 2}, {1, 1, 0}});
  EXPECT_EQ(fuse(Tensor(f), Tensor(Matrix(1, 3)), p.constants().mlp).value(), f);
}

class CadmForward : public ::testing::Test {
 protected:
  static constexpr std::size_t kDomains = 3;
  static constexpr std::size_t kBlock = 3;
  static constexpr std::size_t kDim = 4;

  void SetUp() override {
    Rng init(21);
    params_ = CadmParams::init(kDim, init);
    std::mt19937_64 rng(22);
    features_ = testing::random_matrix(rng, kDomains * kBlock, kDim, 0.0, 1.0);
  }

  CadmParams params_;
  Matrix features_;
};

TEST_F(CadmForward, ShapesAndStochasticRows) {
  CentroidBank bank(kDomains, 0.05);
  const CadmOutput out = cadm_forward(Tensor(features_), kDomains, params_.constants(), bank);
  EXPECT_EQ(shape_string(out.fused.value()), "9x4");
  EXPECT_EQ(shape_string(out.record.attention), "3x9");
  expect_matrix_near(testing::row_sums_of(out.record.attention), Matrix(3, 1, 1.0), 1e-9);
  expect_matrix_near(testing::row_sums_of(out.record.contrary), Matrix(3, 1, 1.0), 1e-9);
  for (std::size_t g = 0; g < kDomains; ++g) EXPECT_TRUE(bank.initialized(g));
}

TEST_F(CadmForward, IdenticalDomainsShareAttentionRows) {
  for (std::size_t r = 0; r < kBlock; ++r) {
    for (std::size_t c = 0; c < kDim; ++c) features_(kBlock + r, c) = features_(r, c);
  }
  CentroidBank bank(kDomains, 0.05);
  const CadmOutput out = cadm_forward(Tensor(features_), kDomains, params_.constants(), bank);
  for (std::size_t c = 0; c < out.record.attention.cols(); ++c) {
    EXPECT_EQ(out.record.attention(0, c), out.record.attention(1, c));
    EXPECT_EQ(out.record.contrary(0, c), out.record.contrary(1, c));
  }
}

TEST_F(CadmForward, RejectsUnevenBlocks) {
  CentroidBank bank(kDomains, 0.05);
  EXPECT_THROW(cadm_forward(Tensor(Matrix(8, kDim)), kDomains, params_.constants(), bank), ConfigError);
}

TEST_F(CadmForward, PlainAttentionOptionUsesAttentionMap) {
  CentroidBank a(kDomains, 1.0), b(kDomains, 1.0);
  const CadmOutput contrary = cadm_forward(Tensor(features_), kDomains, params_.constants(), a);
  const CadmOutput plain = cadm_forward(Tensor(features_), kDomains, params_.constants(), b, {.contrary = false});
  EXPECT_EQ(plain.record.attention, contrary.record.attention);
  EXPECT_NE(plain.fused.value(), contrary.fused.value());
}

TEST_F(CadmForward, FullPipelineGradientMatchesFiniteDifferences) {
  // N = 2 sources plus the target, b = 3, D = 4; the bank is copied inside the
  // function so every evaluation starts from the same history.
  CentroidBank seeded(kDomains, 0.05);
  std::mt19937_64 rng(23);
  for (std::size_t g = 0; g < kDomains; ++g) seeded.set(g, testing::random_matrix(rng, 1, kDim));
  const Matrix weights = testing::random_matrix(rng, kDomains * kBlock, kDim);
  const std::vector<gradcheck::Input> inputs = {{features_},      {params_.query_proj}, {params_.kv_proj},
                                                {params_.mlp.w1}, {params_.mlp.b1},     {params_.mlp.w2},
                                                {params_.mlp.b2}};
  const auto fn = [&](std::span<const Tensor> in) {
    CentroidBank bank = seeded;
    const CadmWeights w{in[1], in[2], {in[3], in[4], in[5], in[6]}};
    return sum(mul(cadm_forward(in[0], kDomains, w, bank).fused, Tensor(weights)));
  };
  EXPECT_LT(gradcheck::max_relative_error(fn, inputs), 1e-4);
}

TEST_F(CadmForward, InferenceFuseMatchesFuseWithStoredCentroid) {
  CentroidBank bank(kDomains, 0.05);
  cadm_forward(Tensor(features_), kDomains, params_.constants(), bank);
  const CadmWeights w = params_.constants();
  const Matrix block = row_slice(Tensor(features_), 0, kBlock).value();
  const Matrix stored = bank.centroid(2);
  const Matrix first = inference_fuse(Tensor(block), 2, w, bank).value();
  EXPECT_EQ(first, fuse(Tensor(block), Tensor(stored), w.mlp).value());
  EXPECT_EQ(inference_fuse(Tensor(block), 2, w, bank).value(), first);
  EXPECT_EQ(bank.centroid(2), stored);
}

TEST_F(CadmForward, InferenceFuseIsRowIndependent) {
  CentroidBank bank(kDomains, 0.05);
  cadm_forward(Tensor(features_), kDomains, params_.constants(), bank);
  const CadmWeights w = params_.constants();
  const Matrix together = inference_fuse(Tensor(features_), 1, w, bank).value();
  for (std::size_t r = 0; r < features_.rows(); ++r) {
    const Matrix single = inference_fuse(row_slice(Tensor(features_), r, 1), 1, w, bank).value();
    for (std::size_t c = 0; c < kDim; ++c) EXPECT_EQ(single(0, c), together(r, c));
  }
}

TEST_F(CadmForward, InferenceFuseNeedsStoredCentroid) {
  const CentroidBank bank(kDomains, 0.05);
  EXPECT_THROW(inference_fuse(Tensor(features_), 0, params_.constants(), bank), ContractError);
}

}  // namespace
}  // namespace adnt
