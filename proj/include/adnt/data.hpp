// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic multi-domain data, batch sampling and feature-file I/O.
//
// Domains are stored as s_1 .. s_N followed by the target t. Target labels
// are kept only for evaluation; the batch type never carries them.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adnt/model.hpp"
#include "adnt/numerics.hpp"

namespace adnt {

/// Affine "style" of one domain: x = R diag(scale) mu + translation + sigma eps.
/// Rotations act on the coordinate planes (0,1), (2,3), ...; a single angle is
/// applied to every plane.
struct DomainSpec {
  std::vector<double> rotation_deg;
  std::vector<double> scale;        // empty = all ones
  std::vector<double> translation;  // empty = zero
  double noise_sigma = 1.0;

  void validate(std::size_t input_dim) const;
};

struct SyntheticConfig {
  std::size_t num_classes = 5;
  std::size_t num_sources = 3;
  std::size_t samples_per_class = 200;
  std::size_t input_dim = 16;
  double separation = 4.0;
  std::uint64_t seed = 1;

  // Shape of the default domain shift (see default_domain_specs).
  double rotation_min_deg = 15.0;
  double rotation_max_deg = 45.0;
  double translation_scale = 2.0;
  double noise_sigma = 1.0;

  void validate() const;
};

struct DomainData {
  std::string id;
  Matrix features;
  std::vector<std::size_t> labels;

  bool operator==(const DomainData&) const = default;
};

struct Dataset {
  std::vector<DomainData> domains;
  std::size_t num_classes = 0;
  std::size_t input_dim = 0;
  /// false when the target came from a file with label -1.
  bool target_labeled = true;

  std::size_t num_domains() const noexcept { return domains.size(); }
  std::size_t num_sources() const noexcept { return domains.size() - 1; }
  std::size_t target_index() const noexcept { return domains.size() - 1; }
  const DomainData& target() const { return domains.back(); }

  bool operator==(const Dataset&) const = default;
};

/// "s1" .. "sN", "t".
std::string domain_id(std::size_t index, std::size_t num_sources);

/// Sources rotated evenly across [rotation_min, rotation_max) with the target
/// at rotation_max, each with a random translation of norm translation_scale.
std::vector<DomainSpec> default_domain_specs(const SyntheticConfig& config);

/// Shared class prototypes, per-domain affine style plus isotropic noise.
/// `specs` holds N+1 entries (sources then target).
Dataset generate(const SyntheticConfig& config, std::span<const DomainSpec> specs);

/// One batch: N+1 blocks of b = B/(N+1) rows, ordered s_1 .. s_N, t.
struct DomainBatch {
  std::size_t num_domains = 0;
  std::size_t block_rows = 0;
  Matrix inputs;                          // B x input_dim
  std::vector<std::size_t> source_labels;  // N*b ground-truth labels
  std::vector<std::size_t> indices;        // B row indices within each domain

  std::size_t size() const noexcept { return inputs.rows(); }
  std::span<const std::size_t> target_indices() const {
    return std::span(indices).subspan((num_domains - 1) * block_rows, block_rows);
  }
};

/// Throws ConfigError unless B is divisible by N+1 and every domain has at
/// least b samples. Returns b.
std::size_t block_rows_for(const Dataset& dataset, std::size_t batch_size);

/// b rows per domain drawn uniformly without replacement.
DomainBatch sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng);

/// Epoch-based sampler. An epoch is ceil(|X_t| / b) batches and visits every
/// target sample at least once; each domain walks a shuffled permutation and
/// reshuffles when exhausted. Rows are unique within a domain block.
class EpochSampler {
 public:
  EpochSampler(const Dataset& dataset, std::size_t batch_size, Rng& rng);

  std::size_t batches_per_epoch() const noexcept { return batches_per_epoch_; }
  DomainBatch next();

 private:
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t position = 0;
  };
  std::vector<std::size_t> draw(Cursor& cursor, std::size_t domain_size);

  const Dataset& dataset_;
  Rng& rng_;
  std::size_t block_rows_;
  std::size_t batches_per_epoch_;
  std::size_t issued_ = 0;
  std::vector<Cursor> cursors_;
};

/// Assembles a batch from explicit per-domain row indices.
DomainBatch make_batch(const Dataset& dataset, std::span<const std::vector<std::size_t>> rows);

// --- feature files --------------------------------------------------------------

struct FeatureFileOptions {
  std::size_t input_dim = 0;    // 0: take from header
  std::size_t num_sources = 0;  // 0: infer from the ids present
  std::size_t num_classes = 0;  // 0: max label + 1
};

/// Comma-delimited, header `domain,label,f0,...,f{d-1}`, one sample per row.
Dataset load_features(const std::filesystem::path& path, const FeatureFileOptions& options = {});
void save_features(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace adnt
