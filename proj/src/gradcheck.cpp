// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "adnt/cadm.hpp"
#include "adnt/errors.hpp"
#include "adnt/losses.hpp"
#include "adnt/memory.hpp"
#include "adnt/model.hpp"

namespace adnt::gradcheck {

namespace {

double evaluate(const ScalarFn& fn, std::span<const Input> inputs) {
  std::vector<Tensor> constants;
  constants.reserve(inputs.size());
  for (const Input& in : inputs) constants.emplace_back(in.value);
  const Tensor out = fn(constants);
  return out.item();
}

}  // namespace

Matrix numeric_gradient(const ScalarFn& fn, std::span<const Input> inputs, std::size_t which, double h) {
  std::vector<Input> work(inputs.begin(), inputs.end());
  Matrix grad(work[which].value.rows(), work[which].value.cols());
  auto values = work[which].value.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = evaluate(fn, work);
    values[i] = saved - h;
    const double down = evaluate(fn, work);
    values[i] = saved;
    grad.values()[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<Matrix> analytic_gradients(const ScalarFn& fn, std::span<const Input> inputs) {
  Tape tape;
  std::vector<Tensor> tensors;
  tensors.reserve(inputs.size());
  for (const Input& in : inputs) {
    tensors.push_back(in.differentiable ? tape.variable(in.value) : Tensor(in.value));
  }
  const Tensor out = fn(tensors);
  if (!out.on_tape()) throw ContractError("gradcheck: output does not depend on any differentiable input");
  tape.backward(out);
  std::vector<Matrix> grads;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    grads.push_back(inputs[i].differentiable ? tensors[i].grad() : Matrix());
  }
  return grads;
}

// Central differences at h = 1e-5 carry round-off near 1e-11 for O(1)
// functions; the floor keeps a structurally zero gradient (a normalized
// 1-dimensional feature, say) from turning that noise into a large ratio.
constexpr double kGradientFloor = 1e-6;

double relative_error(const Matrix& analytic, const Matrix& numeric) {
  if (!analytic.same_shape(numeric)) {
    throw DimensionError("gradcheck: gradient shapes " + shape_string(analytic) + " vs " + shape_string(numeric));
  }
  double diff = 0.0;
  double scale = kGradientFloor;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.values()[i];
    const double n = numeric.values()[i];
    diff = std::max(diff, std::abs(a - n));
    scale = std::max({scale, std::abs(a), std::abs(n)});
  }
  return diff / scale;
}

double max_relative_error(const ScalarFn& fn, std::span<const Input> inputs, double h) {
  const std::vector<Matrix> analytic = analytic_gradients(fn, inputs);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].differentiable) continue;
    worst = std::max(worst, relative_error(analytic[i], numeric_gradient(fn, inputs, i, h)));
  }
  return worst;
}

// --- suite ----------------------------------------------------------------------

namespace {

struct Instance {
  std::vector<Input> inputs;
  ScalarFn fn;
};

using Builder = std::function<Instance(Rng&)>;

std::size_t dim(Rng& rng, std::size_t lo = 1, std::size_t hi = 8) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Matrix uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

Matrix probability_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m = uniform(rng, rows, cols, 0.1, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double total = 0.0;
    for (double v : m.row(r)) total += v;
    for (double& v : m.row(r)) v /= total;
  }
  return m;
}

std::vector<std::size_t> labels(Rng& rng, std::size_t n, std::size_t k) {
  std::uniform_int_distribution<std::size_t> dist(0, k - 1);
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

// Reduces a non-scalar output to a scalar with a fixed random weighting so
// every output entry contributes a distinct amount.
Tensor weigh(const Tensor& out, const Matrix& weights) { return sum(mul(out, Tensor(weights))); }

Builder unary(Tensor (*op)(const Tensor&), double lo, double hi) {
  return [op, lo, hi](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    Matrix x = uniform(rng, r, c, lo, hi);
    const Tensor probe = op(Tensor(x));
    Matrix w = uniform(rng, probe.rows(), probe.cols());
    return Instance{{{std::move(x)}}, [op, w](std::span<const Tensor> in) { return weigh(op(in[0]), w); }};
  };
}

// b's shape: 0 same, 1 scalar, 2 row, 3 column.
Builder binary(Tensor (*op)(const Tensor&, const Tensor&), bool positive_rhs) {
  return [op, positive_rhs](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    const int mode = std::uniform_int_distribution<int>(0, 3)(rng);
    const std::size_t br = (mode == 0 || mode == 3) ? r : 1;
    const std::size_t bc = (mode == 0 || mode == 2) ? c : 1;
    Matrix b = positive_rhs ? uniform(rng, br, bc, 0.5, 2.0) : uniform(rng, br, bc);
    Matrix w = uniform(rng, r, c);
    return Instance{{{uniform(rng, r, c)}, {std::move(b)}},
                    [op, w](std::span<const Tensor> in) { return weigh(op(in[0], in[1]), w); }};
  };
}

std::vector<Input> mlp_inputs(const MlpParams& p) {
  return {{p.w1}, {p.b1}, {p.w2}, {p.b2}};
}

MlpWeights mlp_from(std::span<const Tensor> in, std::size_t offset) {
  return {in[offset], in[offset + 1], in[offset + 2], in[offset + 3]};
}

// Biases are randomized too so that the check covers non-zero bias gradients
// through ReLU boundaries away from zero.
MlpParams random_mlp(Rng& rng, std::size_t in, std::size_t hidden, std::size_t out) {
  MlpParams p = MlpParams::init(in, hidden, out, rng);
  p.b1 = uniform(rng, 1, hidden, -0.5, 0.5);
  p.b2 = uniform(rng, 1, out, -0.5, 0.5);
  return p;
}

CentroidBank seeded_bank(Rng& rng, std::size_t domains, std::size_t d) {
  CentroidBank bank(domains, std::uniform_real_distribution<double>(0.05, 0.95)(rng));
  for (std::size_t g = 0; g < domains; ++g) bank.set(g, uniform(rng, 1, d));
  return bank;
}

std::vector<std::pair<std::string, Builder>> builders() {
  std::vector<std::pair<std::string, Builder>> out;

  out.emplace_back("matmul", [](Rng& rng) {
    const std::size_t n = dim(rng), k = dim(rng), m = dim(rng);
    Matrix w = uniform(rng, n, m);
    return Instance{{{uniform(rng, n, k)}, {uniform(rng, k, m)}},
                    [w](std::span<const Tensor> in) { return weigh(matmul(in[0], in[1]), w); }};
  });
  out.emplace_back("transpose", [](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    Matrix w = uniform(rng, c, r);
    return Instance{{{uniform(rng, r, c)}}, [w](std::span<const Tensor> in) { return weigh(transpose(in[0]), w); }};
  });
  out.emplace_back("add", binary(&add, false));
  out.emplace_back("sub", binary(&sub, false));
  out.emplace_back("mul", binary(&mul, false));
  out.emplace_back("div", binary(&div, true));
  out.emplace_back("scale", [](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    const double f = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    Matrix w = uniform(rng, r, c);
    return Instance{{{uniform(rng, r, c)}}, [w, f](std::span<const Tensor> in) { return weigh(scale(in[0], f), w); }};
  });
  out.emplace_back("add_scalar", [](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    Matrix w = uniform(rng, r, c);
    return Instance{{{uniform(rng, r, c)}},
                    [w](std::span<const Tensor> in) { return weigh(mul(add_scalar(in[0], 0.7), in[0]), w); }};
  });
  out.emplace_back("exp", unary(&exp, -1.0, 1.0));
  out.emplace_back("log", unary(&log, 0.2, 2.0));
  out.emplace_back("relu", unary(&relu, -1.0, 1.0));
  out.emplace_back("softmax_rows", unary(&softmax_rows, -2.0, 2.0));
  out.emplace_back("concat_cols", [](Rng& rng) {
    const std::size_t r = dim(rng), a = dim(rng, 1, 4), b = dim(rng, 1, 4);
    Matrix w = uniform(rng, r, a + b);
    return Instance{{{uniform(rng, r, a)}, {uniform(rng, r, b)}},
                    [w](std::span<const Tensor> in) { return weigh(concat_cols(in[0], in[1]), w); }};
  });
  out.emplace_back("concat_rows", [](Rng& rng) {
    const std::size_t c = dim(rng), a = dim(rng, 1, 3), b = dim(rng, 1, 3), d = dim(rng, 1, 2);
    Matrix w = uniform(rng, a + b + d, c);
    return Instance{{{uniform(rng, a, c)}, {uniform(rng, b, c)}, {uniform(rng, d, c)}},
                    [w](std::span<const Tensor> in) { return weigh(concat_rows(in), w); }};
  });
  out.emplace_back("row_slice", [](Rng& rng) {
    const std::size_t r = dim(rng, 2), c = dim(rng);
    const std::size_t begin = dim(rng, 0, r - 1);
    const std::size_t count = dim(rng, 1, r - begin);
    Matrix w = uniform(rng, count, c);
    return Instance{{{uniform(rng, r, c)}},
                    [w, begin, count](std::span<const Tensor> in) { return weigh(row_slice(in[0], begin, count), w); }};
  });
  out.emplace_back("col_slice", [](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng, 2);
    const std::size_t begin = dim(rng, 0, c - 1);
    const std::size_t count = dim(rng, 1, c - begin);
    Matrix w = uniform(rng, r, count);
    return Instance{{{uniform(rng, r, c)}},
                    [w, begin, count](std::span<const Tensor> in) { return weigh(col_slice(in[0], begin, count), w); }};
  });
  out.emplace_back("repeat_rows", [](Rng& rng) {
    const std::size_t c = dim(rng), n = dim(rng);
    Matrix w = uniform(rng, n, c);
    return Instance{{{uniform(rng, 1, c)}}, [w, n](std::span<const Tensor> in) { return weigh(repeat_rows(in[0], n), w); }};
  });
  out.emplace_back("mean_rows", unary(&mean_rows, -1.0, 1.0));
  out.emplace_back("sum", [](Rng& rng) {
    const std::size_t r = dim(rng), c = dim(rng);
    return Instance{{{uniform(rng, r, c)}}, [](std::span<const Tensor> in) { return sum(mul(in[0], in[0])); }};
  });
  out.emplace_back("row_sums", unary(&row_sums, -1.0, 1.0));
  out.emplace_back("row_sq_norms", unary(&row_sq_norms, -1.0, 1.0));

  // Merge module.
  out.emplace_back("domain_prototype", unary(&domain_prototype, -1.0, 1.0));
  out.emplace_back("project_qkv", [](Rng& rng) {
    const std::size_t d = dim(rng, 2), g = dim(rng, 2, 4), b = dim(rng, 2);
    std::vector<Matrix> w = {uniform(rng, g, d), uniform(rng, b, d), uniform(rng, b, d)};
    return Instance{{{uniform(rng, g, d)}, {uniform(rng, b, d)}, {uniform(rng, d, d)}, {uniform(rng, d, 2 * d)}},
                    [w](std::span<const Tensor> in) {
                      CadmWeights cw{in[2], in[3], {}};
                      const QkvProjection p = project_qkv(in[0], in[1], cw);
                      return add(add(weigh(p.queries, w[0]), weigh(p.keys, w[1])), weigh(p.values, w[2]));
                    }};
  });
  out.emplace_back("attention_map", [](Rng& rng) {
    const std::size_t d = dim(rng), g = dim(rng, 1, 4), b = dim(rng, 2);
    Matrix w = uniform(rng, g, b);
    return Instance{{{uniform(rng, g, d)}, {uniform(rng, b, d)}},
                    [w](std::span<const Tensor> in) { return weigh(attention_map(in[0], in[1]), w); }};
  });
  out.emplace_back("contrary_attention", [](Rng& rng) {
    const std::size_t g = dim(rng, 1, 4), b = dim(rng, 2);
    Matrix w = uniform(rng, g, b);
    return Instance{{{probability_rows(rng, g, b)}},
                    [w](std::span<const Tensor> in) { return weigh(contrary_attention(in[0]), w); }};
  });
  out.emplace_back("style_centroid", [](Rng& rng) {
    const std::size_t g = dim(rng, 1, 4), b = dim(rng, 2), d = dim(rng);
    Matrix w = uniform(rng, g, d);
    return Instance{{{probability_rows(rng, g, b)}, {uniform(rng, b, d)}},
                    [w](std::span<const Tensor> in) { return weigh(style_centroid(in[0], in[1]), w); }};
  });
  out.emplace_back("fuse", [](Rng& rng) {
    const std::size_t d = dim(rng, 1, 6), n = dim(rng);
    const MlpParams mlp = random_mlp(rng, 2 * d, d, d);
    Matrix w = uniform(rng, n, d);
    std::vector<Input> inputs = {{uniform(rng, n, d)}, {uniform(rng, 1, d)}};
    for (Input& p : mlp_inputs(mlp)) inputs.push_back(std::move(p));
    return Instance{std::move(inputs), [w](std::span<const Tensor> in) {
                      return weigh(fuse(in[0], in[1], mlp_from(in, 2)), w);
                    }};
  });
  out.emplace_back("ema_update", [](Rng& rng) {
    const std::size_t d = dim(rng);
    const CentroidBank bank = seeded_bank(rng, 1, d);
    Matrix w = uniform(rng, 1, d);
    return Instance{{{uniform(rng, 1, d)}}, [bank, w](std::span<const Tensor> in) {
                      CentroidBank local = bank;
                      return weigh(local.ema_update(0, in[0]), w);
                    }};
  });
  for (const bool contrary : {true, false}) {
    out.emplace_back(contrary ? "cadm_forward" : "cadm_forward(plain attention)", [contrary](Rng& rng) {
      const std::size_t d = dim(rng, 2, 6), domains = dim(rng, 2, 4), b = dim(rng, 1, 3);
      CadmParams params = CadmParams::init(d, rng);
      params.mlp = random_mlp(rng, 2 * d, d, d);
      const CentroidBank bank = seeded_bank(rng, domains, d);
      Matrix w = uniform(rng, domains * b, d);
      std::vector<Input> inputs = {{uniform(rng, domains * b, d)}, {params.query_proj}, {params.kv_proj}};
      for (Input& p : mlp_inputs(params.mlp)) inputs.push_back(std::move(p));
      return Instance{std::move(inputs), [bank, w, domains, contrary](std::span<const Tensor> in) {
                        CentroidBank local = bank;
                        const CadmWeights cw{in[1], in[2], mlp_from(in, 3)};
                        return weigh(cadm_forward(in[0], domains, cw, local, {.contrary = contrary}).fused, w);
                      }};
    });
  }
  out.emplace_back("inference_fuse", [](Rng& rng) {
    const std::size_t d = dim(rng, 1, 6), n = dim(rng);
    CadmParams params = CadmParams::init(d, rng);
    params.mlp = random_mlp(rng, 2 * d, d, d);
    const CentroidBank bank = seeded_bank(rng, 2, d);
    Matrix w = uniform(rng, n, d);
    // The projections do not enter inference.
    std::vector<Input> inputs = {{uniform(rng, n, d)}, {params.query_proj, false}, {params.kv_proj, false}};
    for (Input& p : mlp_inputs(params.mlp)) inputs.push_back(std::move(p));
    return Instance{std::move(inputs), [bank, w](std::span<const Tensor> in) {
                      const CadmWeights cw{in[1], in[2], mlp_from(in, 3)};
                      return weigh(inference_fuse(in[0], 1, cw, bank), w);
                    }};
  });

  // Memory and losses.
  out.emplace_back("soft_label", [](Rng& rng) {
    const std::size_t n = dim(rng), d = dim(rng), k = dim(rng, 2);
    Matrix w = uniform(rng, n, k);
    return Instance{{{uniform(rng, n, d)}, {uniform(rng, k, d)}},
                    [w](std::span<const Tensor> in) { return weigh(soft_label(in[0], in[1]), w); }};
  });
  out.emplace_back("cross_entropy", [](Rng& rng) {
    const std::size_t n = dim(rng), k = dim(rng, 2);
    const auto y = labels(rng, n, k);
    return Instance{{{probability_rows(rng, n, k)}},
                    [y](std::span<const Tensor> in) { return cross_entropy(in[0], y); }};
  });
  out.emplace_back("center_loss", [](Rng& rng) {
    const std::size_t n = dim(rng), d = dim(rng), k = dim(rng, 2);
    const auto y = labels(rng, n, k);
    const Matrix centers = uniform(rng, k, d);
    return Instance{{{uniform(rng, n, d)}},
                    [y, centers](std::span<const Tensor> in) { return center_loss(in[0], y, centers); }};
  });
  for (const RceSign sign : {RceSign::kNegative, RceSign::kLiteral}) {
    out.emplace_back(sign == RceSign::kNegative ? "rce" : "rce(literal sign)", [sign](Rng& rng) {
      const std::size_t n = dim(rng), k = dim(rng, 2);
      Matrix w = uniform(rng, n, 1);
      return Instance{{{probability_rows(rng, n, k), false}, {probability_rows(rng, n, k)}},
                      [w, sign](std::span<const Tensor> in) { return weigh(rce(in[0], in[1], sign), w); }};
    });
  }
  out.emplace_back("arce", [](Rng& rng) {
    const std::size_t n = dim(rng), k = dim(rng, 2);
    const auto yhat = labels(rng, n, k);
    const ArceConfig config{std::uniform_real_distribution<double>(0.5, 2.0)(rng), RceSign::kNegative};
    return Instance{{{probability_rows(rng, n, k), false}, {probability_rows(rng, n, k)}},
                    [yhat, config](std::span<const Tensor> in) { return arce(in[0], in[1], yhat, config); }};
  });
  out.emplace_back("soft_label+arce", [](Rng& rng) {
    const std::size_t n = dim(rng), d = dim(rng), k = dim(rng, 2);
    const Matrix p = probability_rows(rng, n, k);
    return Instance{{{uniform(rng, n, d)}, {uniform(rng, k, d)}}, [p](std::span<const Tensor> in) {
                      const Tensor q = soft_label(in[0], in[1]);
                      return arce(Tensor(p), q, hard_label(q.value()), ArceConfig{});
                    }};
  });
  out.emplace_back("total_loss", [](Rng& rng) {
    return Instance{{{uniform(rng, 1, 1)}, {uniform(rng, 1, 1)}, {uniform(rng, 1, 1)}},
                    [](std::span<const Tensor> in) {
                      const Tensor sq = mul(in[0], in[1]);
                      return total_loss(sq, exp(in[1]), mul(in[2], in[2])).loss;
                    }};
  });

  // Model forwards.
  const auto model = [](const char* which) {
    return [which](Rng& rng) {
      const std::size_t n = dim(rng), in_dim = dim(rng), hidden = dim(rng), out_dim = dim(rng, 2);
      const MlpParams p = random_mlp(rng, in_dim, hidden, out_dim);
      Matrix w = uniform(rng, n, out_dim);
      std::vector<Input> inputs = {{uniform(rng, n, in_dim)}};
      for (Input& i : mlp_inputs(p)) inputs.push_back(std::move(i));
      const std::string kind = which;
      return Instance{std::move(inputs), [w, kind](std::span<const Tensor> in) {
                        const MlpWeights mw = mlp_from(in, 1);
                        if (kind == "extract") return weigh(extract(in[0], mw, 0.0), w);
                        if (kind == "extract_scaled") return weigh(extract(in[0], mw, 3.0), w);
                        if (kind == "classify") return weigh(classify(in[0], mw), w);
                        return weigh(mlp_forward(in[0], mw), w);
                      }};
    };
  };
  out.emplace_back("mlp_forward", model("mlp"));
  out.emplace_back("extract", model("extract"));
  out.emplace_back("extract (feature_scale 3)", model("extract_scaled"));
  out.emplace_back("classify", model("classify"));
  out.emplace_back("extract+classify+cross_entropy", [](Rng& rng) {
    const std::size_t n = dim(rng), in_dim = dim(rng), d = dim(rng), k = dim(rng, 2);
    const MlpParams e = random_mlp(rng, in_dim, dim(rng), d);
    const MlpParams c = random_mlp(rng, d, dim(rng), k);
    const auto y = labels(rng, n, k);
    std::vector<Input> inputs = {{uniform(rng, n, in_dim)}};
    for (Input& i : mlp_inputs(e)) inputs.push_back(std::move(i));
    for (Input& i : mlp_inputs(c)) inputs.push_back(std::move(i));
    return Instance{std::move(inputs), [y](std::span<const Tensor> in) {
                      return cross_entropy(classify(extract(in[0], mlp_from(in, 1), 3.0), mlp_from(in, 5)), y);
                    }};
  });
  return out;
}

}  // namespace

std::vector<Report> run_suite(std::uint64_t seed, std::size_t instances) {
  constexpr double kStep = 1e-5;
  constexpr double kSmoothness = 1e-6;
  constexpr std::size_t kMaxRedraws = 1000;
  std::vector<Report> reports;
  Rng rng(seed);
  for (const auto& [name, build] : builders()) {
    Report report{name, 0, 0.0, 0};
    while (report.instances < instances) {
      const Instance instance = build(rng);
      const std::vector<Matrix> analytic = analytic_gradients(instance.fn, instance.inputs);
      double worst = 0.0;
      bool smooth = true;
      for (std::size_t i = 0; i < instance.inputs.size() && smooth; ++i) {
        if (!instance.inputs[i].differentiable) continue;
        const Matrix numeric = numeric_gradient(instance.fn, instance.inputs, i, kStep);
        // A difference quotient that changes with the step straddles a ReLU
        // kink or a hard-label switch; such draws say nothing about the tape.
        smooth = relative_error(numeric, numeric_gradient(instance.fn, instance.inputs, i, 2.0 * kStep)) < kSmoothness;
        worst = std::max(worst, relative_error(analytic[i], numeric));
      }
      if (!smooth) {
        if (++report.redrawn > kMaxRedraws) throw NumericError("gradcheck: " + name + " has no smooth instances");
        continue;
      }
      report.max_error = std::max(report.max_error, worst);
      ++report.instances;
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace adnt::gradcheck
