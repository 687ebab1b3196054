// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "adnt/errors.hpp"
#include "adnt/gradcheck.hpp"
#include "adnt/numerics.hpp"
#include "test_support.hpp"

namespace adnt {
namespace {

using testing::expect_matrix_near;

TEST(Matmul, IdentityLeavesOperandUnchanged) {
  const Matrix b = Matrix::from_rows({{3, 4}, {5, 6}});
  EXPECT_EQ(matmul(Tensor(Matrix::identity(2)), Tensor(b)).value(), b);
}

TEST(Matmul, ScalarCase) {
  EXPECT_EQ(matmul(Tensor(Matrix(1, 1, 2.0)), Tensor(Matrix(1, 1, 3.0))).item(), 6.0);
}

TEST(Matmul, GradientOfSumWithRespectToLeftOperand) {
  Tape tape;
  Tensor a = tape.variable(Matrix::from_rows({{1, 2}}));
  const Tensor b(Matrix::from_rows({{3}, {4}}));
  tape.backward(sum(matmul(a, b)));
  // Frozen from central differences with h = 1e-6.
  expect_matrix_near(a.grad(), Matrix::from_rows({{3, 4}}), 1e-12);

  const std::vector<gradcheck::Input> inputs = {{Matrix::from_rows({{1, 2}})}};
  const auto fn = [&b](std::span<const Tensor> in) { return sum(matmul(in[0], b)); };
  expect_matrix_near(gradcheck::numeric_gradient(fn, inputs, 0, 1e-6), Matrix::from_rows({{3, 4}}), 1e-8);
}

TEST(Matmul, RejectsInnerDimensionMismatch) {
  EXPECT_THROW(matmul(Tensor(Matrix(2, 3)), Tensor(Matrix(2, 3))), DimensionError);
}

TEST(Softmax, ZeroRowIsUniform) {
  expect_matrix_near(softmax_rows(Tensor(Matrix(1, 3))).value(), Matrix(1, 3, 1.0 / 3.0), 1e-15);
}

TEST(Softmax, LargeEqualLogitsDoNotOverflow) {
  expect_matrix_near(softmax_rows(Tensor(Matrix::from_rows({{1000, 1000}}))).value(),
                     Matrix::from_rows({{0.5, 0.5}}), 1e-15);
}

TEST(Softmax, IncreasingLogitsGiveIncreasingProbabilities) {
  const Matrix p = softmax_rows(Tensor(Matrix::from_rows({{1, 2, 3}}))).value();
  EXPECT_NEAR(p(0, 0) + p(0, 1) + p(0, 2), 1.0, 1e-15);
  EXPECT_LT(p(0, 0), p(0, 1));
  EXPECT_LT(p(0, 1), p(0, 2));
}

TEST(ConcatCols, JoinsColumns) {
  EXPECT_EQ(concat_cols(Tensor(Matrix::from_rows({{1}, {2}})), Tensor(Matrix::from_rows({{3}, {4}}))).value(),
            Matrix::from_rows({{1, 3}, {2, 4}}));
}

TEST(ConcatCols, EmptyRightOperandIsIdentity) {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(concat_cols(Tensor(a), Tensor(Matrix(2, 0))).value(), a);
}

TEST(ConcatCols, GradientSplitsBetweenOperands) {
  std::mt19937_64 rng(3);
  const Matrix w = testing::random_matrix(rng, 3, 5);
  const std::vector<gradcheck::Input> inputs = {{testing::random_matrix(rng, 3, 2)},
                                                {testing::random_matrix(rng, 3, 3)}};
  const auto fn = [&w](std::span<const Tensor> in) { return sum(mul(concat_cols(in[0], in[1]), Tensor(w))); };
  EXPECT_LT(gradcheck::max_relative_error(fn, inputs), 1e-8);
}

TEST(Detach, KeepsValuesAndBlocksGradient) {
  Tape tape;
  const Matrix xv = Matrix::from_rows({{1, -2}, {3, 0.5}});
  Tensor x = tape.variable(xv);
  Tensor w = tape.variable(Matrix::from_rows({{2, 3}, {4, 5}}));
  Tensor d = detach(x);
  EXPECT_EQ(d.value(), xv);
  tape.backward(sum(mul(d, w)));
  EXPECT_EQ(x.grad(), Matrix(2, 2));
  // The other operand still sees d's values.
  EXPECT_EQ(w.grad(), xv);
}

TEST(Backward, SumGivesOnes) {
  Tape tape;
  Tensor x = tape.variable(Matrix(2, 2, 7.0));
  tape.backward(sum(x));
  EXPECT_EQ(x.grad(), Matrix(2, 2, 1.0));
}

TEST(Backward, HalfSquaredNormGivesInput) {
  Tape tape;
  const Matrix xv = Matrix::from_rows({{1, 2}, {3, 4}});
  Tensor x = tape.variable(xv);
  tape.backward(scale(sum(mul(x, x)), 0.5));
  EXPECT_EQ(x.grad(), xv);
}

TEST(Backward, RandomThreeLayerCompositionMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<gradcheck::Input> inputs = {
        {testing::random_matrix(rng, 4, 3)}, {testing::random_matrix(rng, 3, 5)}, {testing::random_matrix(rng, 1, 5)},
        {testing::random_matrix(rng, 5, 4)}, {testing::random_matrix(rng, 4, 2)}};
    const auto fn = [](std::span<const Tensor> in) {
      Tensor h1 = exp(scale(add(matmul(in[0], in[1]), in[2]), 0.5));
      Tensor h2 = softmax_rows(matmul(h1, in[3]));
      return sum(log(add_scalar(matmul(h2, in[4]), 3.0)));
    };
    EXPECT_LT(gradcheck::max_relative_error(fn, inputs), 1e-4);
  }
}

TEST(Backward, TapeIsSingleUse) {
  Tape tape;
  Tensor x = tape.variable(Matrix(1, 1, 1.0));
  Tensor loss = sum(x);
  tape.backward(loss);
  EXPECT_TRUE(tape.consumed());
  EXPECT_THROW(tape.backward(loss), ContractError);
}

TEST(Backward, RejectsNonScalarLoss) {
  Tape tape;
  Tensor x = tape.variable(Matrix(2, 2, 1.0));
  EXPECT_THROW(tape.backward(x), Error);
}

TEST(Tensor, GradOfConstantThrows) {
  EXPECT_THROW(Tensor(Matrix(1, 1)).grad(), ContractError);
}

TEST(Tensor, ConstantsStayOffTape) {
  EXPECT_FALSE(add(Tensor(Matrix(1, 1, 1.0)), Tensor(Matrix(1, 1, 2.0))).on_tape());
}

TEST(Broadcast, SupportedShapes) {
  const Tensor a(Matrix::from_rows({{1, 2}, {3, 4}}));
  EXPECT_EQ(add(a, Tensor(Matrix(1, 1, 1.0))).value(), Matrix::from_rows({{2, 3}, {4, 5}}));
  EXPECT_EQ(add(a, Tensor(Matrix::from_rows({{10, 20}}))).value(), Matrix::from_rows({{11, 22}, {13, 24}}));
  EXPECT_EQ(mul(a, Tensor(Matrix::from_rows({{2}, {3}}))).value(), Matrix::from_rows({{2, 4}, {9, 12}}));
  EXPECT_THROW(add(a, Tensor(Matrix(3, 1))), DimensionError);
}

TEST(Reductions, Shapes) {
  const Tensor a(Matrix::from_rows({{1, 2}, {3, 4}}));
  EXPECT_EQ(mean_rows(a).value(), Matrix::from_rows({{2, 3}}));
  EXPECT_EQ(row_sums(a).value(), Matrix::from_rows({{3}, {7}}));
  EXPECT_EQ(row_sq_norms(a).value(), Matrix::from_rows({{5}, {25}}));
  EXPECT_EQ(sum(a).item(), 10.0);
}

TEST(Log, ClampsAtFloor) {
  EXPECT_EQ(log(Tensor(Matrix(1, 1, 0.0))).item(), std::log(kLogFloor));
}

TEST(Argmax, TiesResolveToLowestIndex) {
  EXPECT_EQ(argmax_rows(Matrix::from_rows({{0.2, 0.5, 0.3}, {1, 1, 1}, {0, 0, 1}})),
            (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Slicing, RowAndColumnSlices) {
  const Tensor a(Matrix::from_rows({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}}));
  EXPECT_EQ(row_slice(a, 1, 2).value(), Matrix::from_rows({{4, 5, 6}, {7, 8, 9}}));
  EXPECT_EQ(col_slice(a, 2, 1).value(), Matrix::from_rows({{3}, {6}, {9}}));
  EXPECT_THROW(row_slice(a, 2, 2), DimensionError);
}

}  // namespace
}  // namespace adnt
