// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-phase pipeline: supervised pretraining of F and C on the sources, then
// target adaptation with domain merging, class memory and pseudo labels.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adnt/checkpoint.hpp"
#include "adnt/config.hpp"
#include "adnt/data.hpp"
#include "adnt/losses.hpp"

namespace adnt {

struct EpochMetrics {
  std::size_t epoch = 0;
  double target_accuracy = 0.0;
  /// Accuracy of the hard pseudo labels produced during the epoch. Ground-truth
  /// target labels feed only this metric and target_accuracy.
  double pseudo_label_accuracy = 0.0;
  /// Standard deviation over all entries of each batch's contrary map,
  /// averaged over the epoch's batches. 0 when merging is disabled.
  double contrary_std = 0.0;
  /// Batch-averaged losses.
  LossBreakdown loss;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  /// Mean pseudo-label accuracy over the last five epochs.
  double final_pseudo_label_accuracy = 0.0;
  double final_target_accuracy = 0.0;
};

struct PretrainResult {
  Checkpoint checkpoint;
  std::vector<double> epoch_loss;
  double source_accuracy = 0.0;
};

struct AdaptResult {
  Checkpoint checkpoint;
  RunMetrics metrics;
};

struct EvalResult {
  /// Per-domain accuracy, sources first, target last.
  std::vector<double> domain_accuracy;
  double target_accuracy = 0.0;
  double source_accuracy = 0.0;
};

/// ModelDims for `dataset` with widths from `config`.
ModelDims model_dims(const Dataset& dataset, const RunConfig& config);

/// Source-only supervised training with cross entropy. Throws NumericError on
/// divergence.
PretrainResult pretrain(const Dataset& dataset, const RunConfig& config);

/// Target adaptation starting from `pretrained`.
AdaptResult adapt(const Dataset& dataset, const Checkpoint& pretrained, const RunConfig& config);

/// Accuracy through the inference path (stored centroids) when the checkpoint
/// carries merge state, plain extract + classify otherwise. Needs labels.
EvalResult evaluate(const Dataset& dataset, const Checkpoint& checkpoint);

/// Fused (or plain) features of every sample of one domain.
Matrix domain_features(const Dataset& dataset, const Checkpoint& checkpoint, std::size_t domain);

struct SweepCell {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
};

struct SweepRow {
  SweepCell cell;
  bool ok = false;
  std::string error;
  RunMetrics metrics;
};

/// Cartesian product of the config's sweep axes (base value for empty axes).
std::vector<SweepCell> sweep_grid(const RunConfig& config);

/// One adapt run per cell; cells run on `threads` workers (0 = hardware
/// concurrency). A failing cell is reported in its row.
std::vector<SweepRow> sweep(const Dataset& dataset, const Checkpoint& pretrained, const RunConfig& base,
                            std::span<const SweepCell> grid, std::size_t threads = 0);

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path);
void write_summary_csv(const RunMetrics& metrics, const std::filesystem::path& path);
void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path);

/// Shortest round-trip decimal form used in every CSV.
std::string format_number(double value);

}  // namespace adnt
