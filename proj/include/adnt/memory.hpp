// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adnt/numerics.hpp"

namespace adnt {

/// Class-level feature memory: one EMA center per class.
class ClassMemory {
 public:
  ClassMemory(Matrix centers, double beta);

  /// Per-class mean of `features` rows grouped by `labels`, pooled over every
  /// contributing domain. Throws ContractError naming the first empty class.
  static ClassMemory init_centers(const Matrix& features, std::span<const std::size_t> labels,
                                  std::size_t num_classes, double beta);

  const Matrix& centers() const noexcept { return centers_; }
  double beta() const noexcept { return beta_; }
  std::size_t num_classes() const noexcept { return centers_.rows(); }
  std::size_t dim() const noexcept { return centers_.cols(); }

  /// mu_k <- (1 - beta) mu_k + beta h. Only row k changes.
  void update(std::span<const double> h, std::size_t k);

 private:
  Matrix centers_;
  double beta_;
};

/// Soft pseudo labels: row-wise softmax of the raw dot products h . mu^T.
/// Differentiable in both arguments.
Tensor soft_label(const Tensor& h, const Tensor& centers);

/// Hard pseudo labels: per-row argmax, ties to the lowest class.
std::vector<std::size_t> hard_label(const Matrix& q);

}  // namespace adnt
