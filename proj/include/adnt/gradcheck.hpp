// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks for the gradient tape.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adnt/numerics.hpp"

namespace adnt::gradcheck {

/// Builds a 1x1 scalar from the given inputs. Called once on taped inputs for
/// the analytic gradient and repeatedly on constants for the numeric one, so
/// it must not keep state between calls.
using ScalarFn = std::function<Tensor(std::span<const Tensor> inputs)>;

struct Input {
  Matrix value;
  /// Non-differentiable inputs (labels encoded as values, detached operands)
  /// enter as constants and are not perturbed.
  bool differentiable = true;
};

/// d fn / d inputs[which] by central differences with step h.
Matrix numeric_gradient(const ScalarFn& fn, std::span<const Input> inputs, std::size_t which, double h = 1e-5);

/// Gradients of fn with respect to every differentiable input (empty matrices
/// for the rest).
std::vector<Matrix> analytic_gradients(const ScalarFn& fn, std::span<const Input> inputs);

/// max|a - n| / max(max|a|, max|n|, 1e-6): error relative to the gradient's
/// own scale, so entries that are tiny compared with the rest of the tensor
/// do not dominate.
double relative_error(const Matrix& analytic, const Matrix& numeric);

/// Largest relative error over all differentiable inputs.
double max_relative_error(const ScalarFn& fn, std::span<const Input> inputs, double h = 1e-5);

struct Report {
  std::string name;
  std::size_t instances = 0;
  double max_error = 0.0;
  /// Draws rejected because the central difference was not smooth at the
  /// step size (h and 2h disagree), i.e. the draw sat on a ReLU kink.
  std::size_t redrawn = 0;
};

/// Every differentiable operation of the library (tape primitives, the merge
/// module, memory and losses, model forwards) on `instances` random inputs
/// with all dimensions at most 8. Non-scalar outputs are reduced with a random
/// fixed weighting. Step h = 1e-5.
std::vector<Report> run_suite(std::uint64_t seed, std::size_t instances = 20);

}  // namespace adnt::gradcheck
