// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Contrary attention-based domain merge.
//
// Per batch, each domain's mean feature (its prototype) queries every feature
// in the batch. The resulting attention map is reversed into a contrary map
// that favours the least similar features; the contrary-weighted sum of value
// vectors is the domain's style centroid. Centroids are smoothed with an EMA
// and concatenated onto every feature of the domain before a shared MLP
// produces the fused feature.
//
// Domain indices are 0..N-1 for the sources and N for the target.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "adnt/model.hpp"
#include "adnt/numerics.hpp"

namespace adnt {

struct CadmWeights {
  Tensor query_proj;  // D x D
  Tensor kv_proj;     // D x 2D
  MlpWeights mlp;     // 2D -> D -> D
};

struct CadmParams {
  Matrix query_proj;
  Matrix kv_proj;
  MlpParams mlp;

  static CadmParams init(std::size_t dim, Rng& rng);

  /// Rewrites the fusion MLP so that h = relu(f + centroid_gain * Phi W) with
  /// W the current (uniform) bottom block of w1; f >= 0 passes through
  /// unchanged when the centroid term vanishes.
  void residual_fusion_init(double centroid_gain);

  std::size_t dim() const noexcept { return query_proj.rows(); }
  CadmWeights bind(Tape& tape) const;
  CadmWeights constants() const;
  void validate() const;
};

/// EMA bank of per-domain style centroids.
class CentroidBank {
 public:
  CentroidBank(std::size_t num_domains, double alpha);

  double alpha() const noexcept { return alpha_; }
  std::size_t num_domains() const noexcept { return centroids_.size(); }
  bool initialized(std::size_t domain) const;
  /// Throws ContractError for an uninitialized domain.
  const Matrix& centroid(std::size_t domain) const;
  /// Restores a stored centroid (checkpoint loading).
  void set(std::size_t domain, Matrix centroid);

  /// Blends `phi` into the stored centroid and returns the blended value for
  /// use downstream. The stored history enters as a constant, so gradient
  /// reaches `phi` with weight alpha. The first call for a domain seeds the
  /// history with phi's own values.
  Tensor ema_update(std::size_t domain, const Tensor& phi);

 private:
  double alpha_;
  std::vector<std::optional<Matrix>> centroids_;
};

struct AttentionRecord {
  Matrix attention;  // (N+1) x B
  Matrix contrary;   // (N+1) x B
};

struct QkvProjection {
  Tensor queries;  // (N+1) x D
  Tensor keys;     // B x D
  Tensor values;   // B x D
};

/// Mean over the rows of one domain block.
Tensor domain_prototype(const Tensor& block);

QkvProjection project_qkv(const Tensor& prototypes, const Tensor& features, const CadmWeights& w);

/// softmax(q K^T / sqrt(D)) row by row; q may hold several query rows.
Tensor attention_map(const Tensor& queries, const Tensor& keys);

/// Row-wise (1 - a) / sum(1 - a). Requires at least two columns.
Tensor contrary_attention(const Tensor& attention);

/// Contrary-weighted sum of value rows.
Tensor style_centroid(const Tensor& contrary, const Tensor& values);

/// MLP([f, centroid]) with the centroid row broadcast to every row of f.
Tensor fuse(const Tensor& features, const Tensor& centroid, const MlpWeights& mlp);

struct CadmOptions {
  /// false swaps the contrary map for the plain attention map (general
  /// attention ablation).
  bool contrary = true;
};

struct CadmOutput {
  Tensor fused;  // B x D, same row order as the input
  AttentionRecord record;
};

/// Full merge over a batch laid out as `num_domains` equal blocks
/// (s_1 .. s_N, t). Updates the bank once per domain.
CadmOutput cadm_forward(const Tensor& features, std::size_t num_domains, const CadmWeights& w,
                        CentroidBank& bank, const CadmOptions& options = {});

/// Fuses features of one domain with its stored centroid. Read-only on the bank.
Tensor inference_fuse(const Tensor& features, std::size_t domain, const CadmWeights& w,
                      const CentroidBank& bank);

}  // namespace adnt
