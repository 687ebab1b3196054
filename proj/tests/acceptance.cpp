// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "adnt/cadm.hpp"
#include "adnt/checkpoint.hpp"
#include "adnt/gradcheck.hpp"
#include "adnt/losses.hpp"
#include "adnt/memory.hpp"
#include "adnt/model.hpp"
#include "adnt/trainer.hpp"

namespace {

using namespace adnt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeeds[] = {1, 2, 3, 4, 5};

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

int failures = 0;

void report(const std::string& name, const Outcome& o, double seconds, double budget) {
  const bool in_time = seconds < budget;
  const bool ok = o.pass && in_time;
  failures += ok ? 0 : 1;
  std::printf("%s  %-34s %7.2fs (budget %gs)  %s%s\n", ok ? "PASS" : "FAIL", name.c_str(), seconds, budget,
              o.detail.c_str(), in_time ? "" : " over budget");
  std::fflush(stdout);
}

Outcome timed(const std::string& name, double budget, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  const Outcome o = body();
  report(name, o, std::chrono::duration<double>(Clock::now() - start).count(), budget);
  return o;
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

bool rows_stochastic(const Matrix& m, double tol) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) {
      if (v < 0.0) return false;
      s += v;
    }
    if (std::abs(s - 1.0) > tol) return false;
  }
  return true;
}

bool ranks_reversed(const Matrix& a, const Matrix& c) {
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t x = 0; x < a.cols(); ++x) {
      for (std::size_t y = 0; y < a.cols(); ++y) {
        if (a(r, x) < a(r, y) && !(c(r, x) > c(r, y))) return false;
      }
    }
  }
  return true;
}

Outcome gradient_oracle() {
  Outcome o;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : gradcheck::run_suite(1, 20)) {
    o.require(r.instances == 20 && r.max_error < 1e-4, r.name + " " + fmt("%.2e", r.max_error));
    if (r.max_error >= worst) {
      worst = r.max_error;
      worst_name = r.name;
    }
  }
  if (o.pass) o.detail = "worst " + worst_name + " " + fmt("%.2e", worst) + " < 1e-4";
  return o;
}

Outcome contrary_suite() {
  Outcome o;
  Rng rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    Matrix q(4, 6), k(12, 6);
    for (double& v : q.values()) v = u(rng);
    for (double& v : k.values()) v = u(rng);
    const Matrix a = attention_map(Tensor(q), Tensor(k)).value();
    const Matrix c = contrary_attention(Tensor(a)).value();
    if (!rows_stochastic(a, 1e-9) || !rows_stochastic(c, 1e-9)) {
      o.require(false, "row sums off by more than 1e-9");
      break;
    }
    if (!ranks_reversed(a, c)) {
      o.require(false, "rank reversal violated");
      break;
    }
  }
  const Matrix uniform = contrary_attention(Tensor(Matrix(1, 4, 0.25))).value();
  o.require(std::ranges::all_of(uniform.values(), [](double v) { return std::abs(v - 0.25) < 1e-15; }),
            "uniform is not a fixed point");
  const Matrix one_hot = contrary_attention(Tensor(Matrix::from_rows({{1, 0, 0}}))).value();
  o.require(one_hot(0, 0) == 0.0 && std::abs(one_hot(0, 1) - 0.5) < 1e-15 && std::abs(one_hot(0, 2) - 0.5) < 1e-15,
            "one-hot not fully reversed");
  const Matrix hand = contrary_attention(Tensor(Matrix::from_rows({{0.7, 0.2, 0.1}}))).value();
  const double expected[] = {0.15, 0.40, 0.45};
  for (std::size_t j = 0; j < 3; ++j) o.require(std::abs(hand(0, j) - expected[j]) < 1e-12, "hand case mismatch");
  if (o.pass) o.detail = "200 random maps stochastic and reversed; fixed point, one-hot, [0.15 0.40 0.45]";
  return o;
}

Outcome arce_suite() {
  Outcome o;
  const Matrix p = Matrix::from_rows({{0.6, 0.3, 0.1}});
  const Matrix q(1, 3, 1.0 / 3.0);
  const std::vector<std::size_t> yhat = {0};
  const double value = arce(Tensor(p), Tensor(q), yhat, {.tau = 1.0}).item();
  o.require(std::abs(value - 0.6264) <= 1e-3, "hand instance " + fmt("%.5f", value));

  const Matrix sharp = Matrix::from_rows({{0.5, 0.5, 0.0}});
  const double a = arce(Tensor(sharp), Tensor(q), yhat, {.tau = 1.0}).item();
  const double r = rce(Tensor(sharp), Tensor(q)).item();
  o.require(a == r, "zero-entropy delta: arce " + fmt("%.17g", a) + " != rce " + fmt("%.17g", r));

  Rng init(4);
  const MlpParams cls = MlpParams::init(3, 4, 3, init);
  Tape tape;
  const MlpWeights w = cls.bind(tape);
  Tensor h = tape.variable(Matrix::from_rows({{0.5, 1, -0.2}, {0.1, 0.3, 0.9}}));
  Tensor centers = tape.variable(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
  Tensor probs = classify(h, w);
  Tensor soft = soft_label(h, centers);
  tape.backward(arce(probs, soft, hard_label(soft.value()), {}));
  for (const Tensor* t : {&w.w1, &w.b1, &w.w2, &w.b2}) {
    o.require(t->grad() == Matrix(t->rows(), t->cols()), "classifier parameter received gradient");
  }
  o.require(h.grad() != Matrix(2, 3), "no gradient reached the features");
  if (o.pass) o.detail = "hand instance " + fmt("%.5f", value) + ", zero-entropy equality, classifier frozen";
  return o;
}

Outcome ema_memory_suite() {
  Outcome o;
  constexpr double kAlpha = 0.05, kBeta = 0.005;
  const Matrix start = Matrix::from_rows({{1.0, -2.0, 0.5}});
  const Matrix target = Matrix::from_rows({{-1.0, 3.0, 2.0}});
  CentroidBank bank(2, kAlpha);
  bank.set(1, start);
  ClassMemory memory(Matrix::from_rows({{1.0, -2.0, 0.5}, {4.0, 4.0, 4.0}}), kBeta);
  const Matrix untouched = Matrix::from_rows({{4.0, 4.0, 4.0}});
  double worst = 0.0;
  for (int n = 1; n <= 200; ++n) {
    bank.ema_update(1, Tensor(target));
    memory.update(target.row(0), 0);
    for (std::size_t c = 0; c < 3; ++c) {
      const double gap = start(0, c) - target(0, c);
      worst = std::max(worst, std::abs(bank.centroid(1)(0, c) - target(0, c) - std::pow(1 - kAlpha, n) * gap));
      worst = std::max(worst, std::abs(memory.centers()(0, c) - target(0, c) - std::pow(1 - kBeta, n) * gap));
      o.require(memory.centers()(1, c) == untouched(0, c), "memory update touched another class");
    }
    if (!o.pass) break;
  }
  o.require(!bank.initialized(0), "bank update touched another domain");
  o.require(worst < 1e-12, "contraction deviates by " + fmt("%.2e", worst));
  if (o.pass) o.detail = "200 steps at (1-0.05)^n and (1-0.005)^n within " + fmt("%.1e", worst) + ", local";
  return o;
}

struct Variant {
  const char* name;
  bool cadm, contrary, cr, arce;
};

constexpr Variant kVariants[] = {
    {"ADM", true, false, false, false},
    {"CADM", true, true, false, false},
    {"CADM+Cr", true, true, true, false},
    {"full", true, true, true, true},
};

RunConfig variant_config(RunConfig c, const Variant& v) {
  c.use_cadm = v.cadm;
  c.use_contrary = v.contrary;
  c.use_cr = v.cr;
  c.use_arce = v.arce;
  return c;
}

RunConfig default_task(std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.synthetic.seed = seed;
  return c;
}

struct SeedResult {
  double base = 0.0;
  std::vector<AdaptResult> runs;  // kVariants order
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main() {
  std::printf("acceptance: one line per criterion\n");
  timed("gradient oracle", 30.0, gradient_oracle);
  timed("contrary attention suite", 1.0, contrary_suite);
  timed("AR-CE suite", 5.0, arce_suite);
  timed("EMA and memory suite", 1.0, ema_memory_suite);

  std::vector<SeedResult> results;
  const auto e2e_start = Clock::now();
  for (std::uint64_t seed : kSeeds) {
    const RunConfig c = default_task(seed);
    const Dataset data = generate(c.synthetic, default_domain_specs(c.synthetic));
    const PretrainResult pre = pretrain(data, c);
    SeedResult s;
    s.base = evaluate(data, pre.checkpoint).target_accuracy;
    for (const Variant& v : kVariants) s.runs.push_back(adapt(data, pre.checkpoint, variant_config(c, v)));
    std::printf("      seed %llu: base %.4f", static_cast<unsigned long long>(seed), s.base);
    for (std::size_t i = 0; i < std::size(kVariants); ++i) {
      std::printf("  %s %.4f", kVariants[i].name, s.runs[i].metrics.final_target_accuracy);
    }
    std::printf("\n");
    std::fflush(stdout);
    results.push_back(std::move(s));
  }
  const double e2e_seconds = std::chrono::duration<double>(Clock::now() - e2e_start).count();

  const auto median_of = [&](const std::function<double(const SeedResult&)>& f) {
    std::vector<double> v;
    for (const SeedResult& s : results) v.push_back(f(s));
    return median(v);
  };
  const double base = median_of([](const SeedResult& s) { return s.base; });
  std::vector<double> acc;
  for (std::size_t i = 0; i < std::size(kVariants); ++i) {
    acc.push_back(median_of([i](const SeedResult& s) { return s.runs[i].metrics.final_target_accuracy; }));
  }
  const double full = acc[3];

  {
    Outcome o;
    o.require(full >= base + 0.10, "gain below 10 points");
    o.detail = (o.pass ? "" : o.detail + ": ") + "median full " + fmt("%.4f", full) + " vs base " +
               fmt("%.4f", base) + " (" + fmt("%+.1f", 100 * (full - base)) + " points, need +10)";
    report("e2e accuracy gain", o, e2e_seconds, 600.0);
  }
  {
    Outcome o;
    o.require(base <= acc[0] && acc[0] <= acc[1] && acc[1] <= full, "ordering violated");
    o.detail = (o.pass ? "" : o.detail + ": ") + "base " + fmt("%.4f", base) + " <= ADM " + fmt("%.4f", acc[0]) +
               " <= CADM " + fmt("%.4f", acc[1]) + " <= full " + fmt("%.4f", full);
    report("e2e ablation ordering", o, e2e_seconds, 600.0);
  }
  {
    const double first = median_of([](const SeedResult& s) { return s.runs[3].metrics.epochs.front().contrary_std; });
    const double last = median_of([](const SeedResult& s) { return s.runs[3].metrics.epochs.back().contrary_std; });
    Outcome o;
    o.require(last < first, "std(A') did not decrease");
    o.detail = (o.pass ? "" : o.detail + ": ") + "median std(A') first epoch " + fmt("%.3e", first) +
               ", final epoch " + fmt("%.3e", last);
    report("contrary map std trend", o, e2e_seconds, 600.0);
  }
  {
    const double with = median_of([](const SeedResult& s) { return s.runs[3].metrics.final_pseudo_label_accuracy; });
    const double without =
        median_of([](const SeedResult& s) { return s.runs[2].metrics.final_pseudo_label_accuracy; });
    Outcome o;
    o.require(with >= without, "AR-CE lowered pseudo-label accuracy");
    o.detail = (o.pass ? "" : o.detail + ": ") + "median last-5 pseudo-label accuracy with AR-CE " +
               fmt("%.4f", with) + " vs without " + fmt("%.4f", without);
    report("pseudo-label accuracy with AR-CE", o, e2e_seconds, 600.0);
  }

  timed("leakage guard", 120.0, [] {
    const RunConfig c = default_task(1);
    const Dataset data = generate(c.synthetic, default_domain_specs(c.synthetic));
    Dataset corrupt = data;
    for (std::size_t& y : corrupt.domains.back().labels) y = (y + 1) % corrupt.num_classes;
    const PretrainResult pa = pretrain(data, c);
    const PretrainResult pb = pretrain(corrupt, c);
    Outcome o;
    o.require(serialize_checkpoint(pa.checkpoint) == serialize_checkpoint(pb.checkpoint) &&
                  pa.epoch_loss == pb.epoch_loss,
              "pretraining depends on target labels");
    const AdaptResult a = adapt(data, pa.checkpoint, c);
    const AdaptResult b = adapt(corrupt, pb.checkpoint, c);
    o.require(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint),
              "adapted checkpoints differ");
    bool same = a.metrics.epochs.size() == b.metrics.epochs.size();
    for (std::size_t i = 0; same && i < a.metrics.epochs.size(); ++i) {
      const EpochMetrics& x = a.metrics.epochs[i];
      const EpochMetrics& y = b.metrics.epochs[i];
      same = x.loss.total == y.loss.total && x.loss.ce == y.loss.ce && x.loss.cr == y.loss.cr &&
             x.loss.arce == y.loss.arce && x.contrary_std == y.contrary_std;
    }
    o.require(same, "loss trajectories differ");
    if (o.pass) o.detail = "all target labels corrupted: checkpoints and losses bit-identical";
    return o;
  });

  timed("determinism", 120.0, [] {
    const RunConfig c = default_task(2);
    const Dataset data = generate(c.synthetic, default_domain_specs(c.synthetic));
    const fs::path dir = fs::temp_directory_path() / "adnt_acceptance";
    fs::create_directories(dir);
    std::string metrics[2], ckpt[2];
    for (int i = 0; i < 2; ++i) {
      const AdaptResult r = adapt(data, pretrain(data, c).checkpoint, c);
      const fs::path m = dir / ("metrics" + std::to_string(i) + ".csv");
      const fs::path k = dir / ("adapt" + std::to_string(i) + ".ckpt");
      write_metrics_csv(r.metrics, m);
      save_checkpoint(r.checkpoint, k);
      metrics[i] = read_file(m);
      ckpt[i] = read_file(k);
    }
    fs::remove_all(dir);
    Outcome o;
    o.require(!metrics[0].empty() && metrics[0] == metrics[1], "metrics files differ");
    o.require(!ckpt[0].empty() && ckpt[0] == ckpt[1], "checkpoint files differ");
    if (o.pass) o.detail = "metrics.csv and checkpoint bytes identical across two runs";
    return o;
  });

  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
