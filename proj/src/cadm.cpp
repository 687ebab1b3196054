// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/cadm.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "adnt/errors.hpp"

namespace adnt {

CadmParams CadmParams::init(std::size_t dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  CadmParams p;
  p.query_proj = Matrix(dim, dim);
  for (double& v : p.query_proj.values()) v = dist(rng);
  p.kv_proj = Matrix(dim, 2 * dim);
  for (double& v : p.kv_proj.values()) v = dist(rng);
  p.mlp = MlpParams::init(2 * dim, dim, dim, rng);
  return p;
}

void CadmParams::residual_fusion_init(double centroid_gain) {
  const std::size_t d = dim();
  for (std::size_t r = 0; r < 2 * d; ++r) {
    for (std::size_t c = 0; c < d; ++c) mlp.w1(r, c) = r < d ? (r == c ? 1.0 : 0.0) : mlp.w1(r, c) * centroid_gain;
  }
  mlp.b1 = Matrix(1, d);
  mlp.w2 = Matrix::identity(d);
  mlp.b2 = Matrix(1, d);
}

CadmWeights CadmParams::bind(Tape& tape) const {
  return {tape.variable(query_proj), tape.variable(kv_proj), mlp.bind(tape)};
}

CadmWeights CadmParams::constants() const {
  return {Tensor(query_proj), Tensor(kv_proj), mlp.constants()};
}

void CadmParams::validate() const {
  const std::size_t d = dim();
  if (d == 0 || query_proj.cols() != d) {
    throw DimensionError("cadm: query projection must be DxD, got " + shape_string(query_proj));
  }
  if (kv_proj.rows() != d || kv_proj.cols() != 2 * d) {
    throw DimensionError("cadm: key/value projection must be Dx2D, got " + shape_string(kv_proj));
  }
  mlp.validate("cadm.mlp");
  if (mlp.in_dim() != 2 * d || mlp.hidden_dim() != d || mlp.out_dim() != d) {
    throw DimensionError("cadm: fusion MLP must be 2D -> D -> D");
  }
  if (!query_proj.all_finite() || !kv_proj.all_finite()) throw NumericError("cadm: non-finite projection");
}

// --- centroid bank ------------------------------------------------------------

CentroidBank::CentroidBank(std::size_t num_domains, double alpha)
    : alpha_(alpha), centroids_(num_domains) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("centroid EMA rate must be in (0, 1]");
}

bool CentroidBank::initialized(std::size_t domain) const {
  return domain < centroids_.size() && centroids_[domain].has_value();
}

const Matrix& CentroidBank::centroid(std::size_t domain) const {
  if (!initialized(domain)) {
    throw ContractError("centroid bank: domain " + std::to_string(domain) + " is not initialized");
  }
  return *centroids_[domain];
}

void CentroidBank::set(std::size_t domain, Matrix centroid) {
  if (domain >= centroids_.size()) throw ContractError("centroid bank: domain out of range");
  centroids_[domain] = std::move(centroid);
}

Tensor CentroidBank::ema_update(std::size_t domain, const Tensor& phi) {
  if (domain >= centroids_.size()) throw ContractError("centroid bank: domain out of range");
  if (!phi.value().all_finite()) throw NumericError("centroid bank: non-finite style centroid");
  auto& stored = centroids_[domain];
  if (stored && !stored->same_shape(phi.value())) {
    throw DimensionError("centroid bank: shape " + shape_string(phi.value()) + " vs stored " +
                         shape_string(*stored));
  }
  const Tensor history(stored ? *stored : phi.value());
  Tensor blended = add(scale(phi, alpha_), scale(history, 1.0 - alpha_));
  stored = blended.value();
  return blended;
}

// --- operations ---------------------------------------------------------------

Tensor domain_prototype(const Tensor& block) {
  if (block.rows() == 0) throw ContractError("domain_prototype: empty domain block");
  return mean_rows(block);
}

QkvProjection project_qkv(const Tensor& prototypes, const Tensor& features, const CadmWeights& w) {
  const std::size_t d = w.query_proj.rows();
  if (prototypes.cols() != d || features.cols() != d) {
    throw DimensionError("project_qkv: feature dim " + std::to_string(features.cols()) +
                         " / prototype dim " + std::to_string(prototypes.cols()) +
                         " vs projection dim " + std::to_string(d));
  }
  Tensor kv = matmul(features, w.kv_proj);
  return {matmul(prototypes, w.query_proj), col_slice(kv, 0, d), col_slice(kv, d, d)};
}

Tensor attention_map(const Tensor& queries, const Tensor& keys) {
  if (queries.cols() != keys.cols()) {
    throw DimensionError("attention_map: query dim " + std::to_string(queries.cols()) +
                         " vs key dim " + std::to_string(keys.cols()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(keys.cols()));
  return softmax_rows(scale(matmul(queries, transpose(keys)), inv_sqrt_d));
}

Tensor contrary_attention(const Tensor& attention) {
  if (attention.cols() < 2) {
    throw ContractError("contrary_attention: needs at least 2 attended features, got " +
                        std::to_string(attention.cols()));
  }
  Tensor complement = add_scalar(scale(attention, -1.0), 1.0);
  return div(complement, row_sums(complement));
}

Tensor style_centroid(const Tensor& contrary, const Tensor& values) {
  if (contrary.cols() != values.rows()) {
    throw DimensionError("style_centroid: " + shape_string(contrary.value()) + " weights vs " +
                         shape_string(values.value()) + " values");
  }
  return matmul(contrary, values);
}

Tensor fuse(const Tensor& features, const Tensor& centroid, const MlpWeights& mlp) {
  if (centroid.rows() != 1 || centroid.cols() != features.cols()) {
    throw DimensionError("fuse: centroid " + shape_string(centroid.value()) + " vs features " +
                         shape_string(features.value()));
  }
  return mlp_forward(concat_cols(features, repeat_rows(centroid, features.rows())), mlp);
}

CadmOutput cadm_forward(const Tensor& features, std::size_t num_domains, const CadmWeights& w,
                        CentroidBank& bank, const CadmOptions& options) {
  const std::size_t batch = features.rows();
  if (num_domains == 0 || batch % num_domains != 0 || batch == 0) {
    throw ConfigError("cadm_forward: batch of " + std::to_string(batch) +
                      " rows is not divisible into " + std::to_string(num_domains) + " domain blocks");
  }
  if (bank.num_domains() != num_domains) {
    throw ConfigError("cadm_forward: centroid bank holds " + std::to_string(bank.num_domains()) +
                      " domains, batch has " + std::to_string(num_domains));
  }
  const std::size_t block = batch / num_domains;

  std::vector<Tensor> blocks;
  std::vector<Tensor> prototypes;
  blocks.reserve(num_domains);
  prototypes.reserve(num_domains);
  for (std::size_t g = 0; g < num_domains; ++g) {
    blocks.push_back(row_slice(features, g * block, block));
    prototypes.push_back(domain_prototype(blocks.back()));
  }

  QkvProjection qkv = project_qkv(concat_rows(prototypes), features, w);
  Tensor attention = attention_map(qkv.queries, qkv.keys);
  Tensor contrary = contrary_attention(attention);
  Tensor centroids = style_centroid(options.contrary ? contrary : attention, qkv.values);

  std::vector<Tensor> fused;
  fused.reserve(num_domains);
  for (std::size_t g = 0; g < num_domains; ++g) {
    Tensor smoothed = bank.ema_update(g, row_slice(centroids, g, 1));
    fused.push_back(fuse(blocks[g], smoothed, w.mlp));
  }
  return {concat_rows(fused), {attention.value(), contrary.value()}};
}

Tensor inference_fuse(const Tensor& features, std::size_t domain, const CadmWeights& w,
                      const CentroidBank& bank) {
  return fuse(features, Tensor(bank.centroid(domain)), w.mlp);
}

}  // namespace adnt
