// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/model.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adnt/errors.hpp"

namespace adnt {

namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

void expect_shape(const Matrix& m, std::size_t rows, std::size_t cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + shape_string(m));
  }
}

}  // namespace

MlpParams MlpParams::init(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  MlpParams p;
  p.w1 = uniform_matrix(in, hidden, 1.0 / std::sqrt(static_cast<double>(in)), rng);
  p.b1 = Matrix(1, hidden);
  p.w2 = uniform_matrix(hidden, out, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  p.b2 = Matrix(1, out);
  return p;
}

MlpWeights MlpParams::bind(Tape& tape) const {
  return {tape.variable(w1), tape.variable(b1), tape.variable(w2), tape.variable(b2)};
}

MlpWeights MlpParams::constants() const {
  return {Tensor(w1), Tensor(b1), Tensor(w2), Tensor(b2)};
}

void MlpParams::validate(std::string_view name) const {
  const std::size_t in = w1.rows();
  const std::size_t hidden = w1.cols();
  const std::size_t out = w2.cols();
  expect_shape(b1, 1, hidden, std::string(name) + ".b1");
  expect_shape(w2, hidden, out, std::string(name) + ".w2");
  expect_shape(b2, 1, out, std::string(name) + ".b2");
  if (in == 0 || hidden == 0 || out == 0) throw DimensionError(std::string(name) + ": empty layer");
  for (const Matrix* m : slots()) {
    if (!m->all_finite()) throw NumericError(std::string(name) + ": non-finite parameter");
  }
}

Tensor mlp_forward(const Tensor& x, const MlpWeights& w) {
  if (x.cols() != w.w1.rows()) {
    throw DimensionError("mlp: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                         std::to_string(w.w1.rows()));
  }
  Tensor hidden = relu(add(matmul(x, w.w1), w.b1));
  return add(matmul(hidden, w.w2), w.b2);
}

ExtractorParams init_extractor(const ModelDims& dims, Rng& rng) {
  return MlpParams::init(dims.input_dim, dims.hidden_dim, dims.feature_dim, rng);
}

ClassifierParams init_classifier(const ModelDims& dims, Rng& rng) {
  return MlpParams::init(dims.feature_dim, dims.bottleneck_dim, dims.num_classes, rng);
}

Tensor extract(const Tensor& x, const MlpWeights& extractor, double feature_scale) {
  Tensor f = relu(mlp_forward(x, extractor));
  if (feature_scale <= 0.0) return f;
  Tensor inverse_norm = exp(scale(log(add_scalar(row_sq_norms(f), 1e-12)), -0.5));
  return scale(mul(f, inverse_norm), feature_scale);
}

Tensor classify(const Tensor& h, const MlpWeights& classifier) {
  return softmax_rows(mlp_forward(h, classifier));
}

// --- Adam -------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(AdamConfig config, std::vector<double> group_lr)
    : config_(config), group_lr_(std::move(group_lr)) {}

void AdamOptimizer::step(std::span<const ParamSlot> slots) {
  if (step_ == 0) {
    first_moment_.clear();
    second_moment_.clear();
    for (const ParamSlot& slot : slots) {
      first_moment_.emplace_back(slot.value->rows(), slot.value->cols());
      second_moment_.emplace_back(slot.value->rows(), slot.value->cols());
    }
  } else if (slots.size() != first_moment_.size()) {
    throw ContractError("adam: parameter list changed between steps");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double bias1 = 1.0 - std::pow(config_.beta1, t);
  const double bias2 = 1.0 - std::pow(config_.beta2, t);

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& slot = slots[i];
    if (slot.group >= group_lr_.size()) throw ContractError("adam: unknown parameter group");
    if (!slot.bound.on_tape() || !slot.bound.tape()->consumed()) {
      throw ContractError("adam: parameter " + std::to_string(i) + " has no gradient");
    }
    const Matrix& grad = slot.bound.grad();
    Matrix& value = *slot.value;
    if (!grad.same_shape(value) || !first_moment_[i].same_shape(value)) {
      throw DimensionError("adam: gradient/parameter shape mismatch at slot " + std::to_string(i));
    }
    const double lr = group_lr_[slot.group];
    auto g = grad.values();
    auto theta = value.values();
    auto m = first_moment_[i].values();
    auto v = second_moment_[i].values();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      theta[k] -= lr * (m_hat / (std::sqrt(v_hat) + config_.epsilon) + config_.weight_decay * theta[k]);
    }
  }
}

void append_slots(std::vector<ParamSlot>& slots, MlpParams& params, const MlpWeights& weights,
                  std::size_t group) {
  slots.push_back({&params.w1, weights.w1, group});
  slots.push_back({&params.b1, weights.b1, group});
  slots.push_back({&params.w2, weights.w2, group});
  slots.push_back({&params.b2, weights.b2, group});
}

}  // namespace adnt
