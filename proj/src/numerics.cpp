// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0

#include "adnt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "adnt/errors.hpp"

namespace adnt {

// --- Matrix -----------------------------------------------------------------

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw DimensionError("Matrix: " + std::to_string(values_.size()) +
                         " values for shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// --- Tensor / Tape ------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<detail::Node>()) {}

Tensor::Tensor(Matrix value) : node_(std::make_shared<detail::Node>()) {
  node_->value = std::move(value);
}

const Matrix& Tensor::grad() const {
  if (node_->tape == nullptr) throw ContractError("grad(): tensor is not on a tape");
  if (!node_->tape->consumed()) throw ContractError("grad(): backward has not run");
  return node_->grad;
}

double Tensor::item() const {
  if (rows() != 1 || cols() != 1) {
    throw ContractError("item(): expected 1x1, got " + shape_string(value()));
  }
  return value()(0, 0);
}

Tape::~Tape() {
  for (auto& node : nodes_) node->tape = nullptr;
}

void Tape::append(const std::shared_ptr<detail::Node>& node) {
  if (consumed_) throw ContractError("tape: recording after backward; use a fresh tape");
  node->tape = this;
  nodes_.push_back(node);
}

Tensor Tape::variable(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  append(node);
  return Tensor(std::move(node));
}

void Tape::backward(const Tensor& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss is not recorded on this tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + shape_string(loss.value()));
  }
  if (consumed_) throw ContractError("backward: tape already consumed");
  consumed_ = true;

  for (auto& node : nodes_) node->grad = Matrix(node->value.rows(), node->value.cols());
  loss.node_->grad(0, 0) = 1.0;

  auto it = std::find(nodes_.begin(), nodes_.end(), loss.node_);
  for (auto rit = std::make_reverse_iterator(std::next(it)); rit != nodes_.rend(); ++rit) {
    detail::Node& node = **rit;
    if (node.backward) node.backward(node);
  }
}

Tensor record_op(Matrix value, std::span<const Tensor* const> inputs,
                 std::function<void(detail::Node&)> backward) {
  Tape* tape = nullptr;
  for (const Tensor* in : inputs) {
    Tape* t = in->tape();
    if (t == nullptr) continue;
    if (tape != nullptr && tape != t) throw ContractError("operation mixes tensors from two tapes");
    tape = t;
  }
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  if (tape != nullptr) {
    node->parents.reserve(inputs.size());
    for (const Tensor* in : inputs) node->parents.push_back(in->node_);
    node->backward = std::move(backward);
    tape->append(node);
  }
  return Tensor(std::move(node));
}

namespace {

bool taped(const detail::Node& n) { return n.tape != nullptr; }

std::string shapes(const Tensor& a, const Tensor& b) {
  return shape_string(a.value()) + " vs " + shape_string(b.value());
}

Matrix matmul_values(const Matrix& a, const Matrix& b, bool transpose_a, bool transpose_b) {
  const std::size_t n = transpose_a ? a.cols() : a.rows();
  const std::size_t inner = transpose_a ? a.rows() : a.cols();
  const std::size_t m = transpose_b ? b.rows() : b.cols();
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = transpose_a ? a(k, i) : a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        out(i, j) += aik * (transpose_b ? b(j, k) : b(k, j));
      }
    }
  }
  return out;
}

void accumulate(Matrix& into, const Matrix& delta) {
  auto dst = into.values();
  auto src = delta.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

enum class Broadcast { kSame, kScalar, kRow, kCol };

Broadcast classify_broadcast(const char* op, const Tensor& a, const Tensor& b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.same_shape(bv)) return Broadcast::kSame;
  if (bv.rows() == 1 && bv.cols() == 1) return Broadcast::kScalar;
  if (bv.rows() == 1 && bv.cols() == av.cols()) return Broadcast::kRow;
  if (bv.cols() == 1 && bv.rows() == av.rows()) return Broadcast::kCol;
  throw DimensionError(std::string(op) + ": cannot broadcast " + shapes(a, b));
}

std::size_t broadcast_index(Broadcast kind, std::size_t r, std::size_t c, std::size_t cols) {
  switch (kind) {
    case Broadcast::kSame: return r * cols + c;
    case Broadcast::kScalar: return 0;
    case Broadcast::kRow: return c;
    case Broadcast::kCol: return r;
  }
  return 0;
}

// f(a, b) elementwise with partials da = df/da, db = df/db evaluated at (a, b).
template <class F, class DA, class DB>
Tensor binary_op(const char* name, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const Broadcast kind = classify_broadcast(name, a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const std::size_t rows = av.rows();
  const std::size_t cols = av.cols();
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = f(av(r, c), bv.values()[broadcast_index(kind, r, c, cols)]);
    }
  }
  return record_op(std::move(out), {&a, &b}, [kind, da, db](detail::Node& self) {
    detail::Node& pa = *self.parents[0];
    detail::Node& pb = *self.parents[1];
    const std::size_t rows = pa.value.rows();
    const std::size_t cols = pa.value.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double g = self.grad(r, c);
        if (g == 0.0) continue;
        const std::size_t bi = broadcast_index(kind, r, c, cols);
        const double x = pa.value(r, c);
        const double y = pb.value.values()[bi];
        if (taped(pa)) pa.grad(r, c) += g * da(x, y);
        if (taped(pb)) pb.grad.values()[bi] += g * db(x, y);
      }
    }
  });
}

template <class F, class D>
Tensor unary_op(const Tensor& x, F f, D dfdx) {
  Matrix out = x.value();
  for (double& v : out.values()) v = f(v);
  return record_op(std::move(out), {&x}, [dfdx](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    auto g = self.grad.values();
    auto in = p.value.values();
    auto dst = p.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * dfdx(in[i]);
  });
}

}  // namespace

// --- operations -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: shape mismatch " + shapes(a, b));
  Matrix out = matmul_values(a.value(), b.value(), false, false);
  return record_op(std::move(out), {&a, &b}, [](detail::Node& self) {
    detail::Node& pa = *self.parents[0];
    detail::Node& pb = *self.parents[1];
    if (taped(pa)) accumulate(pa.grad, matmul_values(self.grad, pb.value, false, true));
    if (taped(pb)) accumulate(pb.grad, matmul_values(pa.value, self.grad, true, false));
  });
}

Tensor transpose(const Tensor& x) {
  const Matrix& v = x.value();
  Matrix out(v.cols(), v.rows());
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c) out(c, r) = v(r, c);
  return record_op(std::move(out), {&x}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < p.grad.rows(); ++r)
      for (std::size_t c = 0; c < p.grad.cols(); ++c) p.grad(r, c) += self.grad(c, r);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; },
      [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& x, double factor) {
  return unary_op(
      x, [factor](double v) { return factor * v; }, [factor](double) { return factor; });
}

Tensor add_scalar(const Tensor& x, double offset) {
  return unary_op(
      x, [offset](double v) { return v + offset; }, [](double) { return 1.0; });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Tensor log(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::log(std::max(v, kLogFloor)); },
      [](double v) { return v > kLogFloor ? 1.0 / v : 0.0; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax_rows(const Tensor& x) {
  Matrix out = x.value();
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    if (row.empty()) continue;
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (double& v : row) v /= total;
  }
  return record_op(std::move(out), {&x}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < self.value.rows(); ++r) {
      auto y = self.value.row(r);
      auto g = self.grad.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < y.size(); ++c) dot += g[c] * y[c];
      auto dst = p.grad.row(r);
      for (std::size_t c = 0; c < y.size(); ++c) dst[c] += y[c] * (g[c] - dot);
    }
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) throw DimensionError("concat_cols: row mismatch " + shapes(a, b));
  const std::size_t rows = a.rows();
  const std::size_t ca = a.cols();
  const std::size_t cb = b.cols();
  Matrix out(rows, ca + cb);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().row(r).begin(), ca, out.row(r).begin());
    std::copy_n(b.value().row(r).begin(), cb, out.row(r).begin() + ca);
  }
  return record_op(std::move(out), {&a, &b}, [ca, cb](detail::Node& self) {
    detail::Node& pa = *self.parents[0];
    detail::Node& pb = *self.parents[1];
    for (std::size_t r = 0; r < self.grad.rows(); ++r) {
      auto g = self.grad.row(r);
      if (taped(pa))
        for (std::size_t c = 0; c < ca; ++c) pa.grad(r, c) += g[c];
      if (taped(pb))
        for (std::size_t c = 0; c < cb; ++c) pb.grad(r, c) += g[ca + c];
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) return Tensor();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + shapes(parts.front(), p));
    }
    rows += p.rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const Tensor& p : parts) {
    auto v = p.value().values();
    values.insert(values.end(), v.begin(), v.end());
  }

  std::vector<const Tensor*> inputs;
  std::vector<std::size_t> offsets;
  inputs.reserve(parts.size());
  offsets.reserve(parts.size());
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    inputs.push_back(&p);
    offsets.push_back(offset);
    offset += p.rows();
  }
  return record_op(Matrix(rows, cols, std::move(values)), inputs,
                   [offsets = std::move(offsets)](detail::Node& self) {
                     const std::size_t cols = self.grad.cols();
                     for (std::size_t i = 0; i < self.parents.size(); ++i) {
                       detail::Node& p = *self.parents[i];
                       if (!taped(p)) continue;
                       auto src = self.grad.values().subspan(offsets[i] * cols, p.value.size());
                       auto dst = p.grad.values();
                       for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                     }
                   });
}

Tensor row_slice(const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.rows()) {
    throw DimensionError("row_slice: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(x.value()));
  }
  const std::size_t cols = x.cols();
  auto src = x.value().values().subspan(begin * cols, count * cols);
  Matrix out(count, cols, std::vector<double>(src.begin(), src.end()));
  return record_op(std::move(out), {&x}, [begin, cols](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    auto dst = p.grad.values().subspan(begin * cols, self.grad.size());
    auto g = self.grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

Tensor col_slice(const Tensor& x, std::size_t begin, std::size_t count) {
  if (begin + count > x.cols()) {
    throw DimensionError("col_slice: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + shape_string(x.value()));
  }
  Matrix out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x.value()(r, begin + c);
  return record_op(std::move(out), {&x}, [begin](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < self.grad.rows(); ++r)
      for (std::size_t c = 0; c < self.grad.cols(); ++c) p.grad(r, begin + c) += self.grad(r, c);
  });
}

Tensor repeat_rows(const Tensor& row, std::size_t count) {
  if (row.rows() != 1) throw DimensionError("repeat_rows: expected 1 row, got " + shape_string(row.value()));
  Matrix out(count, row.cols());
  for (std::size_t r = 0; r < count; ++r) {
    std::copy(row.value().values().begin(), row.value().values().end(), out.row(r).begin());
  }
  return record_op(std::move(out), {&row}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < self.grad.rows(); ++r)
      for (std::size_t c = 0; c < self.grad.cols(); ++c) p.grad(0, c) += self.grad(r, c);
  });
}

Tensor mean_rows(const Tensor& x) {
  if (x.rows() == 0) throw ContractError("mean_rows: empty input");
  const double inv = 1.0 / static_cast<double>(x.rows());
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += x.value()(r, c);
  for (double& v : out.values()) v *= inv;
  return record_op(std::move(out), {&x}, [inv](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < p.grad.rows(); ++r)
      for (std::size_t c = 0; c < p.grad.cols(); ++c) p.grad(r, c) += inv * self.grad(0, c);
  });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.value().values()) total += v;
  return record_op(Matrix(1, 1, total), {&x}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    const double g = self.grad(0, 0);
    for (double& v : p.grad.values()) v += g;
  });
}

Tensor row_sums(const Tensor& x) {
  Matrix out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double v : x.value().row(r)) out(r, 0) += v;
  return record_op(std::move(out), {&x}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < p.grad.rows(); ++r)
      for (double& v : p.grad.row(r)) v += self.grad(r, 0);
  });
}

Tensor row_sq_norms(const Tensor& x) {
  Matrix out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double v : x.value().row(r)) out(r, 0) += v * v;
  return record_op(std::move(out), {&x}, [](detail::Node& self) {
    detail::Node& p = *self.parents[0];
    if (!taped(p)) return;
    for (std::size_t r = 0; r < p.grad.rows(); ++r) {
      const double g = 2.0 * self.grad(r, 0);
      auto in = p.value.row(r);
      auto dst = p.grad.row(r);
      for (std::size_t c = 0; c < in.size(); ++c) dst[c] += g * in[c];
    }
  });
}

Tensor detach(const Tensor& x) { return Tensor(x.value()); }

std::vector<std::size_t> argmax_rows(const Matrix& x) {
  std::vector<std::size_t> out(x.rows(), 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    // max_element returns the first maximum.
    out[r] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace adnt
