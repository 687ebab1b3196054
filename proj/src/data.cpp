// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "adnt/errors.hpp"

namespace adnt {

void DomainSpec::validate(std::size_t input_dim) const {
  const std::size_t planes = input_dim / 2;
  if (rotation_deg.size() > 1 && rotation_deg.size() != planes) {
    throw ConfigError("domain spec: expected 1 or " + std::to_string(planes) + " rotation angles");
  }
  if (!scale.empty() && scale.size() != input_dim) throw ConfigError("domain spec: scale length mismatch");
  if (std::any_of(scale.begin(), scale.end(), [](double s) { return !(s > 0.0); })) {
    throw ConfigError("domain spec: scale entries must be positive");
  }
  if (!translation.empty() && translation.size() != input_dim) {
    throw ConfigError("domain spec: translation length mismatch");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("domain spec: noise sigma must be >= 0");
}

void SyntheticConfig::validate() const {
  if (num_classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  if (num_sources < 1) throw ConfigError("synthetic: need at least 1 source domain");
  if (samples_per_class < 1) throw ConfigError("synthetic: samples per class must be >= 1");
  if (input_dim < 1) throw ConfigError("synthetic: input_dim must be >= 1");
  if (!(separation > 0.0)) throw ConfigError("synthetic: separation must be positive");
  if (!(noise_sigma >= 0.0)) throw ConfigError("synthetic: noise sigma must be >= 0");
}

std::string domain_id(std::size_t index, std::size_t num_sources) {
  return index == num_sources ? "t" : "s" + std::to_string(index + 1);
}

std::vector<DomainSpec> default_domain_specs(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DomainSpec> specs;
  const std::size_t n = config.num_sources;
  for (std::size_t g = 0; g <= n; ++g) {
    DomainSpec spec;
    const double step = (config.rotation_max_deg - config.rotation_min_deg) / static_cast<double>(n);
    spec.rotation_deg = {config.rotation_min_deg + step * static_cast<double>(g)};
    spec.translation.resize(config.input_dim);
    double norm = 0.0;
    for (double& t : spec.translation) {
      t = normal(rng);
      norm += t * t;
    }
    norm = std::sqrt(norm);
    for (double& t : spec.translation) t *= config.translation_scale / norm;
    spec.noise_sigma = config.noise_sigma;
    specs.push_back(std::move(spec));
  }
  return specs;
}

namespace {

std::vector<double> apply_style(std::span<const double> mu, const DomainSpec& spec) {
  std::vector<double> x(mu.begin(), mu.end());
  for (std::size_t c = 0; c < x.size() && !spec.scale.empty(); ++c) x[c] *= spec.scale[c];
  for (std::size_t p = 0; p + 1 < x.size(); p += 2) {
    double deg = 0.0;
    if (spec.rotation_deg.size() == 1) deg = spec.rotation_deg[0];
    else if (!spec.rotation_deg.empty()) deg = spec.rotation_deg[p / 2];
    const double rad = deg * std::numbers::pi / 180.0;
    const double a = x[p];
    const double b = x[p + 1];
    x[p] = std::cos(rad) * a - std::sin(rad) * b;
    x[p + 1] = std::sin(rad) * a + std::cos(rad) * b;
  }
  for (std::size_t c = 0; c < x.size() && !spec.translation.empty(); ++c) x[c] += spec.translation[c];
  return x;
}

}  // namespace

Dataset generate(const SyntheticConfig& config, std::span<const DomainSpec> specs) {
  config.validate();
  if (specs.size() != config.num_sources + 1) {
    throw ConfigError("generate: expected " + std::to_string(config.num_sources + 1) +
                      " domain specs, got " + std::to_string(specs.size()));
  }
  for (const DomainSpec& s : specs) s.validate(config.input_dim);

  Rng proto_rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix prototypes(config.num_classes, config.input_dim);
  for (std::size_t k = 0; k < config.num_classes; ++k) {
    auto row = prototypes.row(k);
    double norm = 0.0;
    for (double& v : row) {
      v = normal(proto_rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : row) v *= config.separation / norm;
  }

  Dataset data;
  data.num_classes = config.num_classes;
  data.input_dim = config.input_dim;
  const std::size_t per_domain = config.num_classes * config.samples_per_class;
  for (std::size_t g = 0; g < specs.size(); ++g) {
    Rng noise_rng(config.seed * 1000003ULL + 7919ULL * (g + 1));
    DomainData domain;
    domain.id = domain_id(g, config.num_sources);
    domain.features = Matrix(per_domain, config.input_dim);
    domain.labels.reserve(per_domain);
    std::size_t row = 0;
    for (std::size_t k = 0; k < config.num_classes; ++k) {
      const std::vector<double> center = apply_style(prototypes.row(k), specs[g]);
      for (std::size_t i = 0; i < config.samples_per_class; ++i, ++row) {
        auto out = domain.features.row(row);
        for (std::size_t c = 0; c < out.size(); ++c) {
          out[c] = center[c] + (specs[g].noise_sigma > 0.0 ? specs[g].noise_sigma * normal(noise_rng) : 0.0);
        }
        domain.labels.push_back(k);
      }
    }
    data.domains.push_back(std::move(domain));
  }
  return data;
}

// --- batches ----------------------------------------------------------------

std::size_t block_rows_for(const Dataset& dataset, std::size_t batch_size) {
  const std::size_t domains = dataset.num_domains();
  if (domains < 2) throw ConfigError("batch: dataset needs at least one source and a target");
  if (batch_size == 0 || batch_size % domains != 0) {
    throw ConfigError("batch size " + std::to_string(batch_size) + " is not divisible by N+1 = " +
                      std::to_string(domains));
  }
  const std::size_t b = batch_size / domains;
  for (const DomainData& d : dataset.domains) {
    if (d.features.rows() < b) {
      throw ConfigError("domain " + d.id + " has " + std::to_string(d.features.rows()) +
                        " samples, fewer than the block size " + std::to_string(b));
    }
  }
  return b;
}

DomainBatch make_batch(const Dataset& dataset, std::span<const std::vector<std::size_t>> rows) {
  if (rows.size() != dataset.num_domains()) throw ContractError("make_batch: one index list per domain");
  DomainBatch batch;
  batch.num_domains = dataset.num_domains();
  batch.block_rows = rows.front().size();
  batch.inputs = Matrix(batch.num_domains * batch.block_rows, dataset.input_dim);
  std::size_t out = 0;
  for (std::size_t g = 0; g < rows.size(); ++g) {
    const DomainData& domain = dataset.domains[g];
    if (rows[g].size() != batch.block_rows) throw ContractError("make_batch: unequal domain blocks");
    for (std::size_t idx : rows[g]) {
      auto src = domain.features.row(idx);
      std::copy(src.begin(), src.end(), batch.inputs.row(out++).begin());
      batch.indices.push_back(idx);
      if (g + 1 < rows.size()) batch.source_labels.push_back(domain.labels[idx]);
    }
  }
  return batch;
}

DomainBatch sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng) {
  const std::size_t b = block_rows_for(dataset, batch_size);
  std::vector<std::vector<std::size_t>> rows;
  for (const DomainData& d : dataset.domains) {
    std::vector<std::size_t> all(d.features.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first b entries are a uniform sample.
    for (std::size_t i = 0; i < b; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(b);
    rows.push_back(std::move(all));
  }
  return make_batch(dataset, rows);
}

EpochSampler::EpochSampler(const Dataset& dataset, std::size_t batch_size, Rng& rng)
    : dataset_(dataset), rng_(rng), block_rows_(block_rows_for(dataset, batch_size)) {
  const std::size_t target_size = dataset.target().features.rows();
  batches_per_epoch_ = (target_size + block_rows_ - 1) / block_rows_;
  cursors_.resize(dataset.num_domains());
}

std::vector<std::size_t> EpochSampler::draw(Cursor& cursor, std::size_t domain_size) {
  std::vector<std::size_t> picked;
  picked.reserve(block_rows_);
  while (picked.size() < block_rows_) {
    if (cursor.position >= cursor.order.size()) {
      cursor.order.resize(domain_size);
      std::iota(cursor.order.begin(), cursor.order.end(), std::size_t{0});
      std::shuffle(cursor.order.begin(), cursor.order.end(), rng_);
      cursor.position = 0;
      // Keep the block unique: move already-picked rows to the back of the new pass.
      std::stable_partition(cursor.order.begin(), cursor.order.end(), [&](std::size_t i) {
        return std::find(picked.begin(), picked.end(), i) == picked.end();
      });
    }
    picked.push_back(cursor.order[cursor.position++]);
  }
  return picked;
}

DomainBatch EpochSampler::next() {
  // Each epoch starts a fresh target pass so it covers every target row.
  if (issued_++ % batches_per_epoch_ == 0) {
    Cursor& target = cursors_.back();
    target.position = target.order.size();
  }
  std::vector<std::vector<std::size_t>> rows;
  rows.reserve(cursors_.size());
  for (std::size_t g = 0; g < cursors_.size(); ++g) {
    rows.push_back(draw(cursors_[g], dataset_.domains[g].features.rows()));
  }
  return make_batch(dataset_, rows);
}

// --- feature files --------------------------------------------------------------

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("non-numeric field '" + std::string(field) + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite field '" + std::string(field) + "'", line);
  return value;
}

long parse_label(std::string_view field, std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("invalid label '" + std::string(field) + "'", line);
  }
  if (value < -1) throw ParseError("invalid label '" + std::string(field) + "'", line);
  return value;
}

// Index of the domain: source k -> k-1, target -> SIZE_MAX.
std::size_t parse_domain(std::string_view field, std::size_t num_sources, std::size_t line) {
  if (field == "t") return static_cast<std::size_t>(-1);
  if (field.size() >= 2 && field.front() == 's') {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(field.data() + 1, field.data() + field.size(), k);
    if (ec == std::errc() && ptr == field.data() + field.size() && k >= 1 &&
        (num_sources == 0 || k <= num_sources)) {
      return k - 1;
    }
  }
  throw ParseError("unknown domain id '" + std::string(field) + "'", line);
}

}  // namespace

Dataset load_features(const std::filesystem::path& path, const FeatureFileOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open feature file " + path.string(), 0);

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty feature file", 1);
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "domain" || header[1] != "label") {
    throw ParseError("header must be domain,label,f0..f{d-1}", 1);
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t c = 0; c < dim; ++c) {
    if (header[c + 2] != "f" + std::to_string(c)) throw ParseError("header column " + std::to_string(c + 2) + " must be f" + std::to_string(c), 1);
  }
  if (options.input_dim != 0 && options.input_dim != dim) {
    throw ParseError("header declares " + std::to_string(dim) + " features, expected " +
                     std::to_string(options.input_dim), 1);
  }

  struct Rows {
    std::vector<double> values;
    std::vector<long> labels;
  };
  std::map<std::size_t, Rows> sources;
  Rows target;
  bool saw_target = false;
  long max_label = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_commas(line);
    if (fields.size() != dim + 2) {
      throw ParseError("expected " + std::to_string(dim + 2) + " fields, got " + std::to_string(fields.size()), line_no);
    }
    const std::size_t g = parse_domain(fields[0], options.num_sources, line_no);
    const long label = parse_label(fields[1], line_no);
    Rows& rows = g == static_cast<std::size_t>(-1) ? target : sources[g];
    if (g == static_cast<std::size_t>(-1)) saw_target = true;
    else if (label < 0) throw ParseError("source rows need a label", line_no);
    if (options.num_classes != 0 && label >= static_cast<long>(options.num_classes)) {
      throw ParseError("label " + std::to_string(label) + " out of range", line_no);
    }
    max_label = std::max(max_label, label);
    rows.labels.push_back(label);
    for (std::size_t c = 0; c < dim; ++c) rows.values.push_back(parse_double(fields[c + 2], line_no));
  }

  if (!saw_target) throw ParseError("no target ('t') rows", 0);
  const std::size_t num_sources = sources.empty() ? 0 : sources.rbegin()->first + 1;
  if (num_sources == 0 || sources.size() != num_sources) throw ParseError("source domains must be s1..sN without gaps", 0);
  if (options.num_sources != 0 && num_sources != options.num_sources) {
    throw ParseError("expected " + std::to_string(options.num_sources) + " source domains, found " +
                     std::to_string(num_sources), 0);
  }
  const bool target_labeled = std::all_of(target.labels.begin(), target.labels.end(), [](long l) { return l >= 0; });
  if (!target_labeled && std::any_of(target.labels.begin(), target.labels.end(), [](long l) { return l >= 0; })) {
    throw ParseError("target labels must be all known or all -1", 0);
  }

  Dataset data;
  data.input_dim = dim;
  data.num_classes = options.num_classes != 0 ? options.num_classes : static_cast<std::size_t>(max_label + 1);
  data.target_labeled = target_labeled;
  auto to_domain = [&](std::size_t g, Rows& rows) {
    DomainData d;
    d.id = domain_id(g, num_sources);
    const std::size_t n = rows.labels.size();
    d.features = Matrix(n, dim, std::move(rows.values));
    d.labels.reserve(n);
    for (long l : rows.labels) d.labels.push_back(l < 0 ? 0 : static_cast<std::size_t>(l));
    return d;
  };
  for (auto& [g, rows] : sources) data.domains.push_back(to_domain(g, rows));
  data.domains.push_back(to_domain(num_sources, target));
  if (!target_labeled) std::fill(data.domains.back().labels.begin(), data.domains.back().labels.end(), 0);
  return data;
}

void save_features(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write feature file " + path.string());
  out << "domain,label";
  for (std::size_t c = 0; c < dataset.input_dim; ++c) out << ",f" << c;
  out << '\n';
  char buffer[64];
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    const DomainData& d = dataset.domains[g];
    const bool unlabeled = g == dataset.target_index() && !dataset.target_labeled;
    for (std::size_t i = 0; i < d.features.rows(); ++i) {
      out << d.id << ',';
      if (unlabeled) out << -1;
      else out << d.labels[i];
      for (double v : d.features.row(i)) {
        const auto res = std::to_chars(buffer, buffer + sizeof(buffer), v);
        out << ',' << std::string_view(buffer, res.ptr - buffer);
      }
      out << '\n';
    }
  }
  if (!out) throw Error("failed writing feature file " + path.string());
}

}  // namespace adnt
