// Copyright 2026 The ADNT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major matrices and a minimal reverse-mode gradient tape.
//
// A `Tensor` is a shared handle onto a node. Nodes created by `Tape::variable`
// or by any operation with at least one taped input are recorded on that tape
// and receive gradients on `Tape::backward`. Operations whose inputs are all
// untaped are evaluated eagerly and produce untaped constants.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adnt {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// "3x4"
std::string shape_string(const Matrix& m);

class Tape;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  Tape* tape = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  // Accumulates this node's grad into the grads of its taped parents.
  std::function<void(Node&)> backward;
};

}  // namespace detail

class Tensor {
 public:
  /// Empty 0x0 constant.
  Tensor();
  /// Untaped constant.
  explicit Tensor(Matrix value);

  std::size_t rows() const noexcept { return node_->value.rows(); }
  std::size_t cols() const noexcept { return node_->value.cols(); }
  const Matrix& value() const noexcept { return node_->value; }

  /// Gradient populated by the last `Tape::backward`. Throws ContractError when
  /// the tensor is not taped or backward has not run.
  const Matrix& grad() const;

  bool on_tape() const noexcept { return node_->tape != nullptr; }
  Tape* tape() const noexcept { return node_->tape; }

  /// Scalar value of a 1x1 tensor.
  double item() const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend class Tape;
  friend Tensor record_op(Matrix value, std::span<const Tensor* const> inputs,
                          std::function<void(detail::Node&)> backward);
};

/// Ordered record of taped nodes. Nodes are appended in creation order, so
/// every parent precedes its children. A tape supports one backward pass;
/// build a new tape for the next step.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  ~Tape();

  /// Registers a differentiable leaf.
  Tensor variable(Matrix value);

  /// Zeroes every taped gradient, seeds d(loss)=1 and propagates in reverse
  /// recording order. `loss` must be 1x1 and recorded on this tape.
  void backward(const Tensor& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  void append(const std::shared_ptr<detail::Node>& node);

  std::vector<std::shared_ptr<detail::Node>> nodes_;
  bool consumed_ = false;

  friend Tensor record_op(Matrix value, std::span<const Tensor* const> inputs,
                          std::function<void(detail::Node&)> backward);
};

/// Creates the result node of an operation. Taped when any input is taped
/// (all taped inputs must share a tape); otherwise an untaped constant and
/// `backward` is dropped.
Tensor record_op(Matrix value, std::span<const Tensor* const> inputs,
                 std::function<void(detail::Node&)> backward);

inline Tensor record_op(Matrix value, std::initializer_list<const Tensor*> inputs,
                        std::function<void(detail::Node&)> backward) {
  return record_op(std::move(value), std::span<const Tensor* const>(inputs.begin(), inputs.size()),
                   std::move(backward));
}

// --- differentiable operations --------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

// Elementwise binary ops. `b` may match `a`'s shape, or be a 1x1 scalar,
// a 1 x a.cols row vector, or an a.rows x 1 column vector.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& x, double factor);
Tensor add_scalar(const Tensor& x, double offset);
Tensor exp(const Tensor& x);
/// Natural log with the input clamped below at `kLogFloor`.
Tensor log(const Tensor& x);
Tensor relu(const Tensor& x);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor row_slice(const Tensor& x, std::size_t begin, std::size_t count);
Tensor col_slice(const Tensor& x, std::size_t begin, std::size_t count);
/// Stacks a 1 x c row `count` times.
Tensor repeat_rows(const Tensor& row, std::size_t count);

/// Column-wise mean over rows: n x c -> 1 x c. Requires n >= 1.
Tensor mean_rows(const Tensor& x);
/// Sum of all entries -> 1x1.
Tensor sum(const Tensor& x);
/// Per-row sums -> n x 1.
Tensor row_sums(const Tensor& x);
/// Per-row squared L2 norms -> n x 1.
Tensor row_sq_norms(const Tensor& x);

/// Same values, no tape connection.
Tensor detach(const Tensor& x);

/// Per-row argmax (value only). Ties resolve to the lowest index.
std::vector<std::size_t> argmax_rows(const Matrix& x);

inline constexpr double kLogFloor = 1e-30;

}  // namespace adnt
