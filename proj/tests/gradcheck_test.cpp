// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "adnt/gradcheck.hpp"
#include "test_support.hpp"

namespace adnt {
namespace {

TEST(RelativeError, ScaleIsTheLargerGradient) {
  EXPECT_DOUBLE_EQ(gradcheck::relative_error(Matrix::from_rows({{2, 0}}), Matrix::from_rows({{1, 0}})), 0.5);
  EXPECT_EQ(gradcheck::relative_error(Matrix(1, 2), Matrix(1, 2)), 0.0);
}

TEST(RelativeError, TinyGradientsAreMeasuredAgainstTheFloor) {
  EXPECT_NEAR(gradcheck::relative_error(Matrix(1, 1, 1e-11), Matrix(1, 1, 0.0)), 1e-5, 1e-18);
}

TEST(NumericGradient, MatchesKnownDerivative) {
  const std::vector<gradcheck::Input> inputs = {{Matrix::from_rows({{0.5, -1}})}};
  const auto fn = [](std::span<const Tensor> in) { return sum(exp(in[0])); };
  const Matrix g = gradcheck::numeric_gradient(fn, inputs, 0);
  EXPECT_NEAR(g(0, 0), std::exp(0.5), 1e-9);
  EXPECT_NEAR(g(0, 1), std::exp(-1.0), 1e-9);
}

TEST(AnalyticGradients, SkipsNonDifferentiableInputs) {
  const std::vector<gradcheck::Input> inputs = {{Matrix(1, 2, 1.0)}, {Matrix(1, 2, 3.0), false}};
  const auto fn = [](std::span<const Tensor> in) { return sum(mul(in[0], in[1])); };
  const auto grads = gradcheck::analytic_gradients(fn, inputs);
  EXPECT_EQ(grads[0], Matrix(1, 2, 3.0));
  EXPECT_TRUE(grads[1].empty());
}

TEST(MaxRelativeError, CatchesAWrongBackward) {
  // A hand-rolled square whose backward forgets the factor 2.
  const auto fn = [](std::span<const Tensor> in) {
    const Tensor* parents[] = {&in[0]};
    Matrix value = in[0].value();
    for (double& v : value.values()) v *= v;
    Tensor sq = record_op(value, parents, [](detail::Node& self) {
      detail::Node& p = *self.parents[0];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        p.grad.values()[i] += self.grad.values()[i] * p.value.values()[i];
      }
    });
    return sum(sq);
  };
  const std::vector<gradcheck::Input> inputs = {{Matrix::from_rows({{0.3, -0.8}})}};
  EXPECT_NEAR(gradcheck::max_relative_error(fn, inputs), 0.5, 1e-6);
}

TEST(Suite, EveryOperationPassesWithinBudget) {
  const auto reports = gradcheck::run_suite(7, 20);
  std::set<std::string> names;
  for (const auto& r : reports) {
    names.insert(r.name);
    EXPECT_EQ(r.instances, 20u) << r.name;
    EXPECT_LT(r.max_error, 1e-4) << r.name;
  }
  for (const char* required : {"matmul", "softmax_rows", "cadm_forward", "center_loss", "arce", "cross_entropy",
                               "soft_label", "extract", "classify", "total_loss"}) {
    EXPECT_TRUE(names.contains(required)) << required;
  }
}

TEST(Suite, DeterministicPerSeed) {
  const auto a = gradcheck::run_suite(3, 5);
  const auto b = gradcheck::run_suite(3, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].max_error, b[i].max_error) << a[i].name;
}

}  // namespace
}  // namespace adnt
