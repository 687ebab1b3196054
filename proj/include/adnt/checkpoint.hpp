// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-file checkpoint. Layout (all integers and floats little-endian):
//
//   magic    8 bytes  "ADNTCKPT"
//   version  u32      = 1
//   count    u32      number of sections
//   section  u32 name length, name bytes, u64 rows, u64 cols,
//            rows*cols f64 values (row-major)
//
// Sections: meta.dims (1x5: input, hidden, feature, bottleneck, classes),
// meta.feature_scale, meta.num_domains, extractor.{w1,b1,w2,b2},
// classifier.{...}, and when present cadm.query_proj, cadm.kv_proj,
// cadm.mlp.{...}, bank.alpha, bank.<domain index>, memory.beta,
// memory.centers.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "adnt/cadm.hpp"
#include "adnt/memory.hpp"
#include "adnt/model.hpp"

namespace adnt {

struct Checkpoint {
  ModelDims dims;
  std::size_t num_domains = 0;
  ExtractorParams extractor;
  ClassifierParams classifier;
  std::optional<CadmParams> cadm;
  std::optional<CentroidBank> bank;
  std::optional<ClassMemory> memory;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// Throws ParseError on a malformed or truncated buffer.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace adnt
