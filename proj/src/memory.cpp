// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/memory.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adnt/errors.hpp"

namespace adnt {

ClassMemory::ClassMemory(Matrix centers, double beta) : centers_(std::move(centers)), beta_(beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("memory EMA rate must be in (0, 1]");
  if (centers_.rows() == 0) throw ContractError("memory: no classes");
  if (!centers_.all_finite()) throw NumericError("memory: non-finite class center");
}

ClassMemory ClassMemory::init_centers(const Matrix& features, std::span<const std::size_t> labels,
                                      std::size_t num_classes, double beta) {
  if (labels.size() != features.rows()) {
    throw DimensionError("init_centers: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(features.rows()) + " feature rows");
  }
  Matrix sums(num_classes, features.cols());
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t k = labels[i];
    if (k >= num_classes) throw ContractError("init_centers: label " + std::to_string(k) + " out of range");
    auto dst = sums.row(k);
    auto src = features.row(i);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
    ++counts[k];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (counts[k] == 0) {
      throw ContractError("init_centers: class " + std::to_string(k) + " has no assigned samples");
    }
    for (double& v : sums.row(k)) v /= static_cast<double>(counts[k]);
  }
  return ClassMemory(std::move(sums), beta);
}

void ClassMemory::update(std::span<const double> h, std::size_t k) {
  if (k >= centers_.rows()) {
    throw ContractError("update_memory: class " + std::to_string(k) + " out of range (K=" +
                        std::to_string(centers_.rows()) + ")");
  }
  if (h.size() != centers_.cols()) {
    throw DimensionError("update_memory: feature of length " + std::to_string(h.size()) +
                         " vs center dim " + std::to_string(centers_.cols()));
  }
  auto mu = centers_.row(k);
  for (std::size_t c = 0; c < mu.size(); ++c) {
    if (!std::isfinite(h[c])) throw NumericError("update_memory: non-finite feature");
    mu[c] = (1.0 - beta_) * mu[c] + beta_ * h[c];
  }
}

Tensor soft_label(const Tensor& h, const Tensor& centers) {
  if (h.cols() != centers.cols()) {
    throw DimensionError("soft_label: feature dim " + std::to_string(h.cols()) + " vs center dim " +
                         std::to_string(centers.cols()));
  }
  return softmax_rows(matmul(h, transpose(centers)));
}

std::vector<std::size_t> hard_label(const Matrix& q) { return argmax_rows(q); }

}  // namespace adnt
