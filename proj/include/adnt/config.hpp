// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration and its key/value text form:
//
//   # comment
//   alpha = 0.05
//   use_arce = true
//
// Every hyperparameter has a key; unknown keys and out-of-range values are
// rejected before any computation starts.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "adnt/data.hpp"
#include "adnt/losses.hpp"
#include "adnt/model.hpp"

namespace adnt {

struct RunConfig {
  // EMA rates for the style centroids and the class memory.
  double alpha = 0.05;
  double beta = 0.005;
  ArceConfig arce;

  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 20;
  std::size_t adapt_epochs = 30;

  // Extractor runs at ten times the classifier rate.
  double lr_extractor = 1e-2;
  double lr_classifier = 1e-3;
  double lr_cadm = 1e-3;
  /// Multiplies all three rates during adaptation. Small steps keep the
  /// pseudo-label feedback loop from collapsing classes.
  double adapt_lr_scale = 0.01;
  AdamConfig adam;

  std::uint64_t seed = 1;

  bool use_cadm = true;
  bool use_contrary = true;
  bool use_cr = true;
  bool use_arce = true;

  /// Batches of forward-only merging that seed the centroid bank before the
  /// class memory is built. 0 = one target epoch.
  std::size_t centroid_warmup_batches = 0;

  /// > 0: the fusion MLP starts as h = f + fusion_identity_init * (uniform
  /// draw applied to the centroid half), so adaptation starts from the
  /// pretrained classifier's view. 0: plain uniform init.
  double fusion_identity_init = 0.1;

  ModelDims dims;

  /// Empty: generate from `synthetic`.
  std::string data_file;
  SyntheticConfig synthetic;

  // Sweep grid; an empty axis keeps the base value.
  std::vector<double> sweep_alpha;
  std::vector<double> sweep_beta;
  std::vector<double> sweep_tau;

  /// Throws ConfigError describing the first invalid value.
  void validate() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& config);

}  // namespace adnt
