// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adnt/errors.hpp"

namespace adnt {

namespace {

void check_labels(const char* op, std::size_t rows, std::span<const std::size_t> labels,
                  std::size_t num_classes) {
  if (labels.size() != rows) {
    throw DimensionError(std::string(op) + ": " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(rows) + " rows");
  }
  for (std::size_t k : labels) {
    if (k >= num_classes) {
      throw ContractError(std::string(op) + ": label " + std::to_string(k) + " out of range (K=" +
                          std::to_string(num_classes) + ")");
    }
  }
}

double scalar_value(const Tensor& t, const char* name) {
  if (t.rows() != 1 || t.cols() != 1) {
    throw ContractError(std::string("total_loss: ") + name + " is not a scalar");
  }
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(std::string("total_loss: non-finite ") + name);
  return v;
}

}  // namespace

Tensor cross_entropy(const Tensor& probs, std::span<const std::size_t> labels) {
  check_labels("cross_entropy", probs.rows(), labels, probs.cols());
  if (probs.rows() == 0) throw ContractError("cross_entropy: empty batch");
  Matrix pick(probs.rows(), probs.cols());
  const double weight = -1.0 / static_cast<double>(probs.rows());
  for (std::size_t i = 0; i < labels.size(); ++i) pick(i, labels[i]) = weight;
  return sum(mul(log(probs), Tensor(std::move(pick))));
}

Tensor center_loss(const Tensor& h, std::span<const std::size_t> labels, const Matrix& centers) {
  check_labels("center_loss", h.rows(), labels, centers.rows());
  if (h.cols() != centers.cols()) {
    throw DimensionError("center_loss: feature dim " + std::to_string(h.cols()) + " vs center dim " +
                         std::to_string(centers.cols()));
  }
  Matrix assigned(h.rows(), h.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto src = centers.row(labels[i]);
    std::copy(src.begin(), src.end(), assigned.row(i).begin());
  }
  return sum(row_sq_norms(sub(h, Tensor(std::move(assigned)))));
}

Tensor rce(const Tensor& p, const Tensor& q, RceSign sign) {
  if (!p.value().same_shape(q.value())) {
    throw DimensionError("rce: prediction " + shape_string(p.value()) + " vs pseudo label " +
                         shape_string(q.value()));
  }
  Tensor per_row = row_sums(mul(log(q), detach(p)));
  return sign == RceSign::kNegative ? scale(per_row, -1.0) : per_row;
}

Matrix delta_distribution(std::span<const double> p_row, std::size_t yhat) {
  const std::size_t k = p_row.size();
  if (k < 2) throw ContractError("delta_distribution: needs at least 2 classes");
  if (yhat >= k) throw ContractError("delta_distribution: pseudo label out of range");
  Matrix delta(1, k - 1);
  double rest = 0.0;
  for (std::size_t j = 0; j < k; ++j) rest += j == yhat ? 0.0 : p_row[j];
  const bool saturated = rest <= 1e-12;
  std::size_t out = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j == yhat) continue;
    delta(0, out++) = saturated ? 1.0 / static_cast<double>(k - 1) : p_row[j] / rest;
  }
  return delta;
}

double entropy(std::span<const double> distribution) {
  double h = 0.0;
  for (double d : distribution) {
    if (d > 0.0) h -= d * std::log(d);
  }
  return h;
}

void ArceConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("arce: tau must be positive");
}

double arce_weight(std::span<const double> p_row, std::size_t yhat, double tau) {
  const Matrix delta = delta_distribution(p_row, yhat);
  return std::exp(-entropy(delta.values()) / tau);
}

Tensor arce(const Tensor& p, const Tensor& q, std::span<const std::size_t> yhat, const ArceConfig& config) {
  config.validate();
  if (p.cols() < 2) throw ContractError("arce: needs at least 2 classes");
  check_labels("arce", p.rows(), yhat, p.cols());
  Matrix weights(p.rows(), 1);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    weights(i, 0) = arce_weight(p.value().row(i), yhat[i], config.tau);
  }
  return sum(mul(rce(p, q, config.sign), Tensor(std::move(weights))));
}

TotalLoss total_loss(const Tensor& ce, const Tensor& cr, const Tensor& arce_term) {
  LossBreakdown b;
  b.ce = scalar_value(ce, "ce");
  b.cr = scalar_value(cr, "cr");
  b.arce = scalar_value(arce_term, "arce");
  Tensor loss = add(add(ce, cr), arce_term);
  b.total = loss.item();
  if (!std::isfinite(b.total)) throw NumericError("total_loss: non-finite total");
  return {std::move(loss), b};
}

}  // namespace adnt
