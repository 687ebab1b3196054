// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// adnt: command-line driver.
//
//   adnt gen-data          --config run.cfg --out runs/data
//   adnt pretrain          --config run.cfg --out runs/pre
//   adnt adapt             --config run.cfg --out runs/a [--checkpoint pre.ckpt]
//   adnt eval              --config run.cfg --checkpoint runs/a/adapt.ckpt --out runs/e
//   adnt sweep             --config run.cfg --out runs/s [--checkpoint pre.ckpt] [--threads N]
//   adnt gradcheck         [--seed N] [--instances N]
//   adnt export-embeddings --config run.cfg --checkpoint runs/a/adapt.ckpt --out runs/x
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "adnt/checkpoint.hpp"
#include "adnt/config.hpp"
#include "adnt/data.hpp"
#include "adnt/embedding.hpp"
#include "adnt/errors.hpp"
#include "adnt/gradcheck.hpp"
#include "adnt/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;
constexpr double kGradTolerance = 1e-4;

struct Options {
  std::string config;
  std::string out;
  std::string checkpoint;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 0;
  std::size_t instances = 20;
};

adnt::RunConfig load(const Options& opt) {
  adnt::RunConfig config = opt.config.empty() ? adnt::RunConfig{} : adnt::load_config(opt.config);
  if (opt.seed) {
    config.seed = *opt.seed;
    config.synthetic.seed = *opt.seed;
  }
  config.validate();
  return config;
}

adnt::Dataset dataset_for(const adnt::RunConfig& config) {
  if (!config.data_file.empty()) return adnt::load_features(config.data_file);
  return adnt::generate(config.synthetic, adnt::default_domain_specs(config.synthetic));
}

fs::path prepare_out(const Options& opt, const adnt::RunConfig& config) {
  const fs::path out = opt.out;
  fs::create_directories(out);
  std::ofstream copy(out / "config.cfg");
  if (!copy) throw adnt::Error("cannot write " + (out / "config.cfg").string());
  copy << adnt::to_config_text(config);
  return out;
}

void write_losses(const std::vector<double>& losses, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw adnt::Error("cannot write " + path.string());
  out << "epoch,loss_ce\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i + 1 << ',' << adnt::format_number(losses[i]) << '\n';
}

void print_eval(const adnt::Dataset& dataset, const adnt::EvalResult& eval) {
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    std::printf("%-4s accuracy %.4f\n", dataset.domains[g].id.c_str(), eval.domain_accuracy[g]);
  }
}

adnt::Checkpoint pretrain_into(const adnt::Dataset& dataset, const adnt::RunConfig& config, const fs::path& out) {
  const adnt::PretrainResult result = adnt::pretrain(dataset, config);
  adnt::save_checkpoint(result.checkpoint, out / "pretrain.ckpt");
  write_losses(result.epoch_loss, out / "pretrain_loss.csv");
  std::printf("pretrain: %zu epochs, final loss %.6f, source accuracy %.4f\n", result.epoch_loss.size(),
              result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(), result.source_accuracy);
  return result.checkpoint;
}

adnt::Checkpoint pretrained(const Options& opt, const adnt::Dataset& dataset, const adnt::RunConfig& config,
                            const fs::path& out) {
  if (!opt.checkpoint.empty()) return adnt::load_checkpoint(opt.checkpoint);
  return pretrain_into(dataset, config, out);
}

int run_gen_data(const Options& opt) {
  const adnt::RunConfig config = load(opt);
  if (!config.data_file.empty()) throw adnt::ConfigError("gen-data: data_file is set; nothing to generate");
  const fs::path out = prepare_out(opt, config);
  const adnt::Dataset dataset = dataset_for(config);
  adnt::save_features(dataset, out / "data.csv");
  std::printf("wrote %zu domains to %s\n", dataset.num_domains(), (out / "data.csv").c_str());
  return 0;
}

int run_pretrain(const Options& opt) {
  const adnt::RunConfig config = load(opt);
  const fs::path out = prepare_out(opt, config);
  pretrain_into(dataset_for(config), config, out);
  return 0;
}

int run_adapt(const Options& opt) {
  const adnt::RunConfig config = load(opt);
  const fs::path out = prepare_out(opt, config);
  const adnt::Dataset dataset = dataset_for(config);
  const adnt::Checkpoint start = pretrained(opt, dataset, config, out);
  const adnt::AdaptResult result = adnt::adapt(dataset, start, config);
  adnt::save_checkpoint(result.checkpoint, out / "adapt.ckpt");
  adnt::write_metrics_csv(result.metrics, out / "metrics.csv");
  adnt::write_summary_csv(result.metrics, out / "summary.csv");
  std::printf("adapt: %zu epochs, final target accuracy %s, pseudo-label accuracy (last 5) %s\n",
              result.metrics.epochs.size(), adnt::format_number(result.metrics.final_target_accuracy).c_str(),
              adnt::format_number(result.metrics.final_pseudo_label_accuracy).c_str());
  return 0;
}

int run_eval(const Options& opt) {
  if (opt.checkpoint.empty()) throw adnt::ConfigError("eval: --checkpoint is required");
  const adnt::RunConfig config = load(opt);
  const fs::path out = prepare_out(opt, config);
  const adnt::Dataset dataset = dataset_for(config);
  const adnt::EvalResult eval = adnt::evaluate(dataset, adnt::load_checkpoint(opt.checkpoint));
  std::ofstream csv(out / "eval.csv");
  if (!csv) throw adnt::Error("cannot write " + (out / "eval.csv").string());
  csv << "domain,accuracy\n";
  for (std::size_t g = 0; g < dataset.num_domains(); ++g) {
    csv << dataset.domains[g].id << ',' << adnt::format_number(eval.domain_accuracy[g]) << '\n';
  }
  print_eval(dataset, eval);
  return 0;
}

int run_sweep(const Options& opt) {
  const adnt::RunConfig config = load(opt);
  const fs::path out = prepare_out(opt, config);
  const adnt::Dataset dataset = dataset_for(config);
  const adnt::Checkpoint start = pretrained(opt, dataset, config, out);
  const std::vector<adnt::SweepCell> grid = adnt::sweep_grid(config);
  const std::vector<adnt::SweepRow> rows = adnt::sweep(dataset, start, config, grid, opt.threads);
  adnt::write_sweep_csv(rows, out / "sweep.csv");
  std::size_t failed = 0;
  for (const auto& row : rows) failed += row.ok ? 0 : 1;
  std::printf("sweep: %zu cells, %zu failed\n", rows.size(), failed);
  return failed == 0 ? 0 : kRuntimeError;
}

int run_gradcheck(const Options& opt) {
  const auto reports = adnt::gradcheck::run_suite(opt.seed.value_or(1), opt.instances);
  bool ok = true;
  for (const auto& r : reports) {
    const bool pass = r.max_error < kGradTolerance;
    ok = ok && pass;
    std::printf("%-32s max rel err %.3e over %zu instances (%zu redrawn) %s\n", r.name.c_str(), r.max_error,
                r.instances, r.redrawn, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : kRuntimeError;
}

int run_export(const Options& opt) {
  if (opt.checkpoint.empty()) throw adnt::ConfigError("export-embeddings: --checkpoint is required");
  const adnt::RunConfig config = load(opt);
  const fs::path out = prepare_out(opt, config);
  adnt::write_embeddings_csv(dataset_for(config), adnt::load_checkpoint(opt.checkpoint), out / "embeddings.csv");
  std::printf("wrote %s\n", (out / "embeddings.csv").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-source domain adaptation with contrary attention-based domain merging"};
  app.require_subcommand(1);
  Options opt;

  const auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", opt.config, "Run configuration (key = value)")->check(CLI::ExistingFile);
    auto* out = cmd->add_option("--out", opt.out, "Output directory");
    if (needs_out) out->required();
    cmd->add_option("--seed", opt.seed, "Overrides seed and data_seed");
    return cmd;
  };

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
    CLI::App* app = nullptr;
  };
  Command commands[] = {
      {"gen-data", "Generate the synthetic dataset as a feature file", run_gen_data},
      {"pretrain", "Source-only pretraining", run_pretrain},
      {"adapt", "Target adaptation (pretrains first without --checkpoint)", run_adapt},
      {"eval", "Per-domain accuracy of a checkpoint", run_eval},
      {"sweep", "Adapt once per (alpha, beta, tau) grid cell", run_sweep},
      {"gradcheck", "Finite-difference check of every differentiable operation", run_gradcheck},
      {"export-embeddings", "Fused features and a 2-D PCA projection as CSV", run_export},
  };
  for (Command& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    const bool is_gradcheck = std::string(c.name) == "gradcheck";
    if (is_gradcheck) {
      c.app->add_option("--seed", opt.seed, "Random instance seed");
      c.app->add_option("--instances", opt.instances, "Instances per operation")->check(CLI::PositiveNumber);
      continue;
    }
    add_common(c.app, true);
    const std::string name = c.name;
    if (name == "adapt" || name == "sweep" || name == "eval" || name == "export-embeddings") {
      c.app->add_option("--checkpoint", opt.checkpoint, "Checkpoint file")->check(CLI::ExistingFile);
    }
    if (name == "sweep") c.app->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }

  for (const Command& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      return c.run(opt);
    } catch (const adnt::ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsageError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kRuntimeError;
    }
  }
  return kUsageError;
}
