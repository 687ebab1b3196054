// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Feature extractor F, classifier C and the Adam optimizer.
//
// Parameters live in plain `Matrix` storage between steps. Each training step
// binds them onto a fresh tape (`bind`) and the optimizer writes the update
// back into the storage from the bound tensors' gradients.

#pragma once

#include <array>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adnt/numerics.hpp"

namespace adnt {

using Rng = std::mt19937_64;

struct MlpWeights {
  Tensor w1, b1, w2, b2;
};

/// linear(in -> hidden) -> ReLU -> linear(hidden -> out).
struct MlpParams {
  Matrix w1, b1, w2, b2;

  /// Weights uniform in +-1/sqrt(fan_in), biases zero.
  static MlpParams init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  std::size_t in_dim() const noexcept { return w1.rows(); }
  std::size_t hidden_dim() const noexcept { return w1.cols(); }
  std::size_t out_dim() const noexcept { return w2.cols(); }

  MlpWeights bind(Tape& tape) const;
  MlpWeights constants() const;

  std::array<Matrix*, 4> slots() { return {&w1, &b1, &w2, &b2}; }
  std::array<const Matrix*, 4> slots() const { return {&w1, &b1, &w2, &b2}; }
  static constexpr std::array<std::string_view, 4> kSlotNames = {"w1", "b1", "w2", "b2"};

  /// Throws DimensionError / NumericError on inconsistent shapes or non-finite entries.
  void validate(std::string_view name) const;
};

Tensor mlp_forward(const Tensor& x, const MlpWeights& w);

struct ModelDims {
  std::size_t input_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t feature_dim = 32;
  std::size_t bottleneck_dim = 32;
  std::size_t num_classes = 5;
  /// Extractor rows are rescaled to this L2 norm; 0 keeps raw activations.
  double feature_scale = 3.0;
};

using ExtractorParams = MlpParams;
using ClassifierParams = MlpParams;

ExtractorParams init_extractor(const ModelDims& dims, Rng& rng);
ClassifierParams init_classifier(const ModelDims& dims, Rng& rng);

/// F(x): the MLP followed by a ReLU, so features are nonnegative like pooled
/// backbone activations. With feature_scale > 0 each row is rescaled to that
/// L2 norm, which keeps memory-center dot products comparable across classes.
Tensor extract(const Tensor& x, const MlpWeights& extractor, double feature_scale);

/// C(h): row-stochastic class probabilities.
Tensor classify(const Tensor& h, const MlpWeights& classifier);

// --- optimizer ----------------------------------------------------------------

/// A parameter storage matrix paired with its bound tensor for this step.
struct ParamSlot {
  Matrix* value = nullptr;
  Tensor bound;
  std::size_t group = 0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 5e-4;
};

/// Adam with decoupled weight decay and per-group learning rates. Slots must
/// be passed in the same order on every step.
class AdamOptimizer {
 public:
  AdamOptimizer(AdamConfig config, std::vector<double> group_lr);

  void step(std::span<const ParamSlot> slots);

  std::size_t steps() const noexcept { return step_; }

 private:
  AdamConfig config_;
  std::vector<double> group_lr_;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
  std::size_t step_ = 0;
};

/// Appends slots for every matrix of `params` bound as `weights`.
void append_slots(std::vector<ParamSlot>& slots, MlpParams& params, const MlpWeights& weights,
                  std::size_t group);

}  // namespace adnt
