// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "adnt/cadm.hpp"
#include "adnt/errors.hpp"
#include "adnt/memory.hpp"

namespace adnt {

namespace {

enum Group : std::size_t { kExtractorGroup = 0, kClassifierGroup = 1, kCadmGroup = 2 };

// Distinct, reproducible streams per phase.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t phase) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (phase + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double accuracy(const std::vector<std::size_t>& predicted, std::span<const std::size_t> truth) {
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(values.size()));
}

void check_compatible(const Dataset& dataset, const Checkpoint& ck) {
  if (ck.dims.input_dim != dataset.input_dim || ck.dims.num_classes != dataset.num_classes) {
    throw ConfigError("checkpoint dims (input " + std::to_string(ck.dims.input_dim) + ", classes " +
                      std::to_string(ck.dims.num_classes) + ") do not match the dataset (input " +
                      std::to_string(dataset.input_dim) + ", classes " + std::to_string(dataset.num_classes) + ")");
  }
  if (ck.num_domains != 0 && ck.num_domains != dataset.num_domains()) {
    throw ConfigError("checkpoint was trained with " + std::to_string(ck.num_domains) +
                      " domains, dataset has " + std::to_string(dataset.num_domains()));
  }
}

}  // namespace

ModelDims model_dims(const Dataset& dataset, const RunConfig& config) {
  ModelDims dims = config.dims;
  dims.input_dim = dataset.input_dim;
  dims.num_classes = dataset.num_classes;
  return dims;
}

// --- pretraining ----------------------------------------------------------------

PretrainResult pretrain(const Dataset& dataset, const RunConfig& config) {
  config.validate();
  PretrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.dims = model_dims(dataset, config);
  ck.num_domains = dataset.num_domains();
  Rng rng(stream_seed(config.seed, 0));
  ck.extractor = init_extractor(ck.dims, rng);
  ck.classifier = init_classifier(ck.dims, rng);

  std::vector<std::pair<std::size_t, std::size_t>> pool;
  for (std::size_t g = 0; g < dataset.num_sources(); ++g) {
    for (std::size_t i = 0; i < dataset.domains[g].features.rows(); ++i) pool.emplace_back(g, i);
  }
  if (pool.empty()) throw ConfigError("pretrain: no source samples");

  AdamOptimizer optimizer(config.adam, {config.lr_extractor, config.lr_classifier});
  const std::size_t batch = config.batch_size;
  for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    std::shuffle(pool.begin(), pool.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < pool.size(); start += batch) {
      const std::size_t n = std::min(batch, pool.size() - start);
      Matrix inputs(n, dataset.input_dim);
      std::vector<std::size_t> labels(n);
      for (std::size_t r = 0; r < n; ++r) {
        const auto [g, i] = pool[start + r];
        auto src = dataset.domains[g].features.row(i);
        std::copy(src.begin(), src.end(), inputs.row(r).begin());
        labels[r] = dataset.domains[g].labels[i];
      }
      Tape tape;
      const MlpWeights ew = ck.extractor.bind(tape);
      const MlpWeights cw = ck.classifier.bind(tape);
      Tensor x(std::move(inputs));
      Tensor loss = cross_entropy(classify(extract(x, ew, ck.dims.feature_scale), cw), labels);
      if (!std::isfinite(loss.item())) {
        throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch + 1));
      }
      tape.backward(loss);
      std::vector<ParamSlot> slots;
      append_slots(slots, ck.extractor, ew, kExtractorGroup);
      append_slots(slots, ck.classifier, cw, kClassifierGroup);
      optimizer.step(slots);
      loss_sum += loss.item();
      ++batches;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }

  const EvalResult eval = evaluate(dataset, ck);
  result.source_accuracy = eval.source_accuracy;
  return result;
}

// --- evaluation -------------------------------------------------------------------

Matrix domain_features(const Dataset& dataset, const Checkpoint& ck, std::size_t domain) {
  check_compatible(dataset, ck);
  const Tensor x(dataset.domains.at(domain).features);
  Tensor f = extract(x, ck.extractor.constants(), ck.dims.feature_scale);
  if (!ck.cadm) return f.value();
  if (!ck.bank) throw ContractError("checkpoint has merge parameters but no centroid bank");
  return inference_fuse(f, domain, ck.cadm->constants(), *ck.bank).value();
}

EvalResult evaluate(const Dataset& dataset, const Checkpoint& ck) {
  check_compatible(dataset, ck);
  EvalResult result;
  const MlpWeights cw = ck.classifier.constants();
  std::size_t source_hits = 0;
  std::size_t source_total = 0;
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    const bool is_target = g == dataset.target_index();
    if (is_target && !dataset.target_labeled) {
      throw ContractError("evaluate: target labels are not available");
    }
    const Tensor h(domain_features(dataset, ck, g));
    const auto predicted = argmax_rows(classify(h, cw).value());
    const auto& truth = dataset.domains[g].labels;
    const double acc = accuracy(predicted, truth);
    result.domain_accuracy.push_back(acc);
    if (is_target) {
      result.target_accuracy = acc;
    } else {
      source_hits += static_cast<std::size_t>(std::llround(acc * static_cast<double>(truth.size())));
      source_total += truth.size();
    }
  }
  result.source_accuracy = source_total ? static_cast<double>(source_hits) / static_cast<double>(source_total) : 0.0;
  return result;
}

// --- adaptation -------------------------------------------------------------------

namespace {

class Adapter {
 public:
  Adapter(const Dataset& dataset, const Checkpoint& pretrained, const RunConfig& config)
      : dataset_(dataset),
        config_(config),
        ck_(pretrained),
        rng_(stream_seed(config.seed, 1)),
        optimizer_(config.adam, {config.adapt_lr_scale * config.lr_extractor, config.adapt_lr_scale * config.lr_classifier,
                                 config.adapt_lr_scale * config.lr_cadm}) {
    check_compatible(dataset, pretrained);
    ck_.num_domains = dataset.num_domains();
    ck_.cadm.reset();
    ck_.bank.reset();
    ck_.memory.reset();
    if (config.use_cadm) {
      Rng init_rng(stream_seed(config.seed, 2));
      ck_.cadm = CadmParams::init(ck_.dims.feature_dim, init_rng);
      if (config.fusion_identity_init > 0.0) ck_.cadm->residual_fusion_init(config.fusion_identity_init);
      ck_.bank = CentroidBank(dataset.num_domains(), config.alpha);
      warm_up_bank();
    }
    memory_ = init_memory();
  }

  AdaptResult run() {
    EpochSampler sampler(dataset_, config_.batch_size, rng_);
    RunMetrics metrics;
    for (std::size_t epoch = 1; epoch <= config_.adapt_epochs; ++epoch) {
      EpochMetrics m;
      m.epoch = epoch;
      std::size_t pseudo_hits = 0;
      std::size_t pseudo_total = 0;
      const std::size_t batches = sampler.batches_per_epoch();
      for (std::size_t i = 0; i < batches; ++i) {
        const StepResult step = train_step(sampler.next());
        m.loss.ce += step.loss.ce;
        m.loss.cr += step.loss.cr;
        m.loss.arce += step.loss.arce;
        m.loss.total += step.loss.total;
        m.contrary_std += step.contrary_std;
        pseudo_hits += step.pseudo_hits;
        pseudo_total += step.pseudo_total;
      }
      const double inv = 1.0 / static_cast<double>(batches);
      m.loss.ce *= inv;
      m.loss.cr *= inv;
      m.loss.arce *= inv;
      m.loss.total *= inv;
      m.contrary_std *= inv;
      if (dataset_.target_labeled) {
        m.pseudo_label_accuracy = static_cast<double>(pseudo_hits) / static_cast<double>(pseudo_total);
        ck_.memory = memory_;
        m.target_accuracy = evaluate(dataset_, ck_).target_accuracy;
      } else {
        m.pseudo_label_accuracy = std::nan("");
        m.target_accuracy = std::nan("");
      }
      metrics.epochs.push_back(m);
    }
    if (!metrics.epochs.empty()) {
      const std::size_t tail = std::min<std::size_t>(5, metrics.epochs.size());
      double sum = 0.0;
      for (std::size_t i = metrics.epochs.size() - tail; i < metrics.epochs.size(); ++i) {
        sum += metrics.epochs[i].pseudo_label_accuracy;
      }
      metrics.final_pseudo_label_accuracy = sum / static_cast<double>(tail);
      metrics.final_target_accuracy = metrics.epochs.back().target_accuracy;
    }
    ck_.memory = memory_;
    return {ck_, metrics};
  }

 private:
  struct StepResult {
    LossBreakdown loss;
    double contrary_std = 0.0;
    std::size_t pseudo_hits = 0;
    std::size_t pseudo_total = 0;
  };

  void warm_up_bank() {
    Rng warm_rng(stream_seed(config_.seed, 3));
    EpochSampler warm(dataset_, config_.batch_size, warm_rng);
    const std::size_t n = config_.centroid_warmup_batches ? config_.centroid_warmup_batches : warm.batches_per_epoch();
    const MlpWeights ew = ck_.extractor.constants();
    const CadmWeights cw = ck_.cadm->constants();
    for (std::size_t i = 0; i < n; ++i) {
      const DomainBatch batch = warm.next();
      cadm_forward(extract(Tensor(batch.inputs), ew, ck_.dims.feature_scale), batch.num_domains, cw, *ck_.bank,
                   {.contrary = config_.use_contrary});
    }
  }

  // Class centers from a full traversal: sources by ground truth, target by
  // the classifier's argmax.
  ClassMemory init_memory() {
    std::vector<double> values;
    std::vector<std::size_t> labels;
    const MlpWeights cw = ck_.classifier.constants();
    for (std::size_t g = 0; g < dataset_.num_domains(); ++g) {
      Matrix h = domain_features(dataset_, ck_, g);
      if (g == dataset_.target_index()) {
        const auto predicted = argmax_rows(classify(Tensor(h), cw).value());
        labels.insert(labels.end(), predicted.begin(), predicted.end());
      } else {
        labels.insert(labels.end(), dataset_.domains[g].labels.begin(), dataset_.domains[g].labels.end());
      }
      values.insert(values.end(), h.values().begin(), h.values().end());
    }
    const std::size_t dim = ck_.dims.feature_dim;
    return ClassMemory::init_centers(Matrix(labels.size(), dim, std::move(values)), labels,
                                     dataset_.num_classes, config_.beta);
  }

  StepResult train_step(const DomainBatch& batch) {
    StepResult out;
    const std::size_t b = batch.block_rows;
    const std::size_t target_begin = (batch.num_domains - 1) * b;

    Tape tape;
    const MlpWeights ew = ck_.extractor.bind(tape);
    const MlpWeights cw = ck_.classifier.bind(tape);
    std::optional<CadmWeights> mw;
    if (ck_.cadm) mw = ck_.cadm->bind(tape);

    Tensor features = extract(Tensor(batch.inputs), ew, ck_.dims.feature_scale);
    Tensor h = features;
    if (mw) {
      CadmOutput merged = cadm_forward(features, batch.num_domains, *mw, *ck_.bank,
                                       {.contrary = config_.use_contrary});
      h = merged.fused;
      out.contrary_std = population_std(merged.record.contrary.values());
    }

    // Pseudo labels for the target block from the class memory. The centers
    // are registered on the tape but their gradient is never applied.
    Tensor h_target = row_slice(h, target_begin, b);
    Tensor centers = tape.variable(memory_.centers());
    Tensor q = soft_label(h_target, centers);
    const std::vector<std::size_t> pseudo = hard_label(q.value());

    std::vector<std::size_t> labels = batch.source_labels;
    labels.insert(labels.end(), pseudo.begin(), pseudo.end());

    Tensor p = classify(h, cw);
    Tensor ce = cross_entropy(p, labels);
    Tensor cr = config_.use_cr ? center_loss(h, labels, memory_.centers()) : Tensor(Matrix(1, 1));
    Tensor ar = config_.use_arce ? arce(row_slice(p, target_begin, b), q, pseudo, config_.arce)
                                 : Tensor(Matrix(1, 1));
    TotalLoss total = total_loss(ce, cr, ar);
    out.loss = total.breakdown;
    if (!total.loss.on_tape()) throw ContractError("adapt: loss is not connected to any parameter");

    tape.backward(total.loss);
    std::vector<ParamSlot> slots;
    append_slots(slots, ck_.extractor, ew, kExtractorGroup);
    append_slots(slots, ck_.classifier, cw, kClassifierGroup);
    if (mw) {
      slots.push_back({&ck_.cadm->query_proj, mw->query_proj, kCadmGroup});
      slots.push_back({&ck_.cadm->kv_proj, mw->kv_proj, kCadmGroup});
      append_slots(slots, ck_.cadm->mlp, mw->mlp, kCadmGroup);
    }
    optimizer_.step(slots);

    // Memory follows the optimizer step, one sample at a time, using the
    // forward-pass features.
    for (std::size_t i = 0; i < labels.size(); ++i) memory_.update(h.value().row(i), labels[i]);

    if (dataset_.target_labeled) {
      const auto& truth = dataset_.target().labels;
      const auto rows = batch.target_indices();
      for (std::size_t i = 0; i < rows.size(); ++i) out.pseudo_hits += pseudo[i] == truth[rows[i]] ? 1 : 0;
      out.pseudo_total += rows.size();
    }
    return out;
  }

  const Dataset& dataset_;
  const RunConfig& config_;
  Checkpoint ck_;
  Rng rng_;
  AdamOptimizer optimizer_;
  ClassMemory memory_{Matrix(1, 1), 1.0};
};

}  // namespace

AdaptResult adapt(const Dataset& dataset, const Checkpoint& pretrained, const RunConfig& config) {
  config.validate();
  block_rows_for(dataset, config.batch_size);
  Adapter adapter(dataset, pretrained, config);
  return adapter.run();
}

// --- sweep ------------------------------------------------------------------------

std::vector<SweepCell> sweep_grid(const RunConfig& config) {
  const std::vector<double> alphas = config.sweep_alpha.empty() ? std::vector{config.alpha} : config.sweep_alpha;
  const std::vector<double> betas = config.sweep_beta.empty() ? std::vector{config.beta} : config.sweep_beta;
  const std::vector<double> taus = config.sweep_tau.empty() ? std::vector{config.arce.tau} : config.sweep_tau;
  std::vector<SweepCell> grid;
  for (double a : alphas)
    for (double b : betas)
      for (double t : taus) grid.push_back({a, b, t});
  return grid;
}

std::vector<SweepRow> sweep(const Dataset& dataset, const Checkpoint& pretrained, const RunConfig& base,
                            std::span<const SweepCell> grid, std::size_t threads) {
  std::vector<SweepRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      SweepRow& row = rows[i];
      row.cell = grid[i];
      try {
        RunConfig cfg = base;
        cfg.alpha = grid[i].alpha;
        cfg.beta = grid[i].beta;
        cfg.arce.tau = grid[i].tau;
        row.metrics = adapt(dataset, pretrained, cfg).metrics;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, grid.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return rows;
}

// --- CSV --------------------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

void write_metrics_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "epoch,target_accuracy,pseudo_label_accuracy,contrary_std,loss_ce,loss_cr,loss_arce,loss_total\n";
  for (const EpochMetrics& m : metrics.epochs) {
    out << m.epoch << ',' << format_number(m.target_accuracy) << ',' << format_number(m.pseudo_label_accuracy)
        << ',' << format_number(m.contrary_std) << ',' << format_number(m.loss.ce) << ','
        << format_number(m.loss.cr) << ',' << format_number(m.loss.arce) << ',' << format_number(m.loss.total)
        << '\n';
  }
}

void write_summary_csv(const RunMetrics& metrics, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "epochs,final_target_accuracy,final_pseudo_label_accuracy\n";
  out << metrics.epochs.size() << ',' << format_number(metrics.final_target_accuracy) << ','
      << format_number(metrics.final_pseudo_label_accuracy) << '\n';
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "alpha,beta,tau,status,final_target_accuracy,final_pseudo_label_accuracy,final_contrary_std,error\n";
  for (const SweepRow& r : rows) {
    const double std_last = r.metrics.epochs.empty() ? 0.0 : r.metrics.epochs.back().contrary_std;
    std::string error = r.error;
    std::replace(error.begin(), error.end(), ',', ';');
    std::replace(error.begin(), error.end(), '\n', ' ');
    out << format_number(r.cell.alpha) << ',' << format_number(r.cell.beta) << ',' << format_number(r.cell.tau)
        << ',' << (r.ok ? "ok" : "failed") << ',' << format_number(r.metrics.final_target_accuracy) << ','
        << format_number(r.metrics.final_pseudo_label_accuracy) << ',' << format_number(std_last) << ','
        << error << '\n';
  }
}

}  // namespace adnt
