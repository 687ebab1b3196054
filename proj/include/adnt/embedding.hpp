// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear 2-D projections of fused features for plotting.

#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "adnt/checkpoint.hpp"
#include "adnt/data.hpp"
#include "adnt/numerics.hpp"

namespace adnt {

struct Pca {
  Matrix mean;        // 1 x d
  Matrix components;  // k x d, orthonormal rows, by decreasing variance
  std::vector<double> variance;
};

/// Principal axes of the rows of `data`. Each component's sign is fixed so its
/// largest-magnitude entry is positive.
Pca fit_pca(const Matrix& data, std::size_t num_components);

/// (data - mean) components^T.
Matrix pca_project(const Pca& pca, const Matrix& data);

/// Writes `domain,label,pc1,..,pck,h0,..` for every sample: features from the
/// checkpoint's inference path, projected on principal axes fitted over all
/// domains together. Unlabeled target rows carry label -1.
void write_embeddings_csv(const Dataset& dataset, const Checkpoint& checkpoint,
                          const std::filesystem::path& path, std::size_t num_components = 2);

}  // namespace adnt
