// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "dgm/errors.hpp"

namespace dgm {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Array = Eigen::ArrayXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Tape;
class ParameterStore;

Index shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Shaped double-precision array. Values are stored row-major in an immutable
/// buffer that copies of the tensor share. A tensor produced by an operation on
/// a recorded input carries a reference to that tape and its node id.
class Tensor {
 public:
  /// Rank-0 tensor holding 0.
  Tensor();
  Tensor(Shape shape, Array data);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor scalar(double value);
  static Tensor full(Shape shape, double value);
  static Tensor zeros(Shape shape) { return full(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return full(std::move(shape), 1.0); }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_->size(); }
  Index dim(Index axis) const;

  const Array& data() const { return *data_; }
  const std::shared_ptr<const Array>& buffer() const { return data_; }
  double operator[](Index i) const { return (*data_)[i]; }
  /// Value of a single-element tensor.
  double item() const;

  /// Row-major view as a matrix; rank-2 only.
  Eigen::Map<const RowMatrix> matrix() const;

  bool requires_grad() const { return tape_ != nullptr; }
  const std::shared_ptr<Tape>& tape() const { return tape_; }
  int node() const { return node_; }

  /// Same values, no tape.
  Tensor detach() const;

 private:
  friend class Tape;

  Tensor(Shape shape, std::shared_ptr<const Array> data, std::shared_ptr<Tape> tape, int node);

  Shape shape_;
  std::shared_ptr<const Array> data_;
  std::shared_ptr<Tape> tape_;
  int node_ = -1;
};

/// Ordered record of primitive operations. Recording order is a topological
/// order; backward walks it in reverse.
class Tape : public std::enable_shared_from_this<Tape> {
 public:
  /// Adds the gradient flowing into a node to the accumulators of its parents.
  /// Slots for parents that are not on the tape are null.
  using Backward = std::function<void(const Array& grad_out, const std::vector<Array*>& grad_in)>;

  static std::shared_ptr<Tape> create();

  /// Leaf bound to a named parameter; its gradient is routed to the store.
  Tensor parameter_leaf(std::string name, Shape shape, std::shared_ptr<const Array> value);
  /// Leaf without parameter binding; gradients can be read with `backward_to`.
  Tensor leaf(const Tensor& value);

  Tensor record(Shape shape, Array value, const std::vector<const Tensor*>& inputs, Backward fn);

  std::size_t size() const { return nodes_.size(); }
  /// Empty unless the node is a parameter leaf.
  const std::string& parameter_name(int node) const { return nodes_.at(static_cast<std::size_t>(node)).parameter; }
  Index node_size(int node) const { return nodes_.at(static_cast<std::size_t>(node)).size; }

  /// Gradient of `root` w.r.t. every node, in recording order.
  std::vector<Array> adjoints(const Tensor& root) const;
  /// As above, accumulating into `seed` where a slot is nonempty.
  std::vector<Array> adjoints(const Tensor& root, std::vector<Array> seed) const;

 private:
  Tape() = default;

  struct Node {
    std::vector<int> parents;
    Index size = 0;
    Backward fn;
    std::string parameter;
  };
  std::vector<Node> nodes_;
};

/// Accumulates d(root)/d(param) into the store's gradient slots. Repeated calls add.
void backward(const Tensor& root, ParameterStore& store);

/// Gradient of a scalar root w.r.t. an arbitrary tensor recorded on the same tape.
Tensor grad(const Tensor& root, const Tensor& wrt);

// Elementwise operations. Binary operations require equal shapes or one
// single-element operand, which is broadcast.
enum class UnaryOp { neg, exp, log, sqrt, sigmoid, softplus, tanh, relu, abs };
enum class BinaryOp { add, sub, mul, div, pow };

Tensor elementwise(UnaryOp op, const Tensor& a);
Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b);

Tensor neg(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor square(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor pow(const Tensor& a, const Tensor& b);

Tensor operator-(const Tensor& a);
Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);
Tensor operator/(double a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);

enum class ReduceOp { sum, mean };

Tensor reduce(ReduceOp op, const Tensor& a);
Tensor reduce(ReduceOp op, const Tensor& a, Index axis);
Tensor sum(const Tensor& a);
Tensor sum(const Tensor& a, Index axis);
Tensor mean(const Tensor& a);
Tensor mean(const Tensor& a, Index axis);

// Shape manipulation.
Tensor reshape(const Tensor& a, Shape shape);
/// [n, d] from a [d] or [1, d] tensor by repeating it as every row.
Tensor broadcast_rows(const Tensor& row, Index n);
/// Stacks `times` copies of the whole tensor along axis 0.
Tensor tile_rows(const Tensor& a, Index times);
/// Rank-2 column slice [begin, begin + count).
Tensor slice_cols(const Tensor& a, Index begin, Index count);
/// Rank-2 column concatenation; all inputs share the row count.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Batch-major view: [n] -> [n, 1], [n, a, b, ...] -> [n, a*b*...].
Tensor flatten_batch(const Tensor& a);

/// Row subset of a constant tensor; used for minibatch selection.
Tensor gather_rows(const Tensor& a, const std::vector<Index>& rows);

bool allclose(const Tensor& a, const Tensor& b, double rtol = 1e-9, double atol = 1e-12);

}  // namespace dgm
