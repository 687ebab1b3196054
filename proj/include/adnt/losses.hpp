// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Training objectives: classification cross entropy, the center loss on fused
// features, and the adaptive reverse cross entropy on target pseudo labels.

#pragma once

#include <cstddef>
#include <span>

#include "adnt/numerics.hpp"

namespace adnt {

/// -(1/n) sum_i log p[i, labels[i]].
Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> labels);

/// sum_i ||h_i - mu_{labels[i]}||^2. The centers are constants.
Tensor center_loss(const Tensor& h, std::span<const std::size_t> labels, const Matrix& centers);

/// kNegative is the usual cross-entropy convention -sum p log q; kLiteral
/// drops the minus sign.
enum class RceSign { kNegative, kLiteral };

/// Per-row reverse cross entropy (n x 1) of the pseudo-label distribution q
/// against the classifier prediction p. p is detached: gradient reaches q only.
Tensor rce(const Tensor& p, const Tensor& q, RceSign sign = RceSign::kNegative);

/// Prediction row without class `yhat`, renormalized to sum 1 (1 x (K-1)).
/// Falls back to the uniform distribution when p[yhat] >= 1 - 1e-12.
Matrix delta_distribution(std::span<const double> p_row, std::size_t yhat);

/// -sum d log d, with 0 log 0 = 0.
double entropy(std::span<const double> distribution);

struct ArceConfig {
  double tau = 1.0;
  RceSign sign = RceSign::kNegative;

  void validate() const;
};

/// exp(-H(delta(p_row, yhat)) / tau): the per-sample weight on the RCE term.
double arce_weight(std::span<const double> p_row, std::size_t yhat, double tau);

/// sum_i rce_i * arce_weight_i over the given (target) rows. p and the
/// weights are constants; gradient reaches q only.
Tensor arce(const Tensor& p, const Tensor& q, std::span<const std::size_t> yhat, const ArceConfig& config);

struct LossBreakdown {
  double ce = 0.0;
  double cr = 0.0;
  double arce = 0.0;
  double total = 0.0;
};

struct TotalLoss {
  Tensor loss;
  LossBreakdown breakdown;
};

/// L = ce + cr + arce. Throws NumericError naming the first non-finite component.
TotalLoss total_loss(const Tensor& ce, const Tensor& cr, const Tensor& arce);

}  // namespace adnt
