// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dgm/parameters.hpp"

namespace dgm {

namespace {

std::shared_ptr<const Array> make_buffer(Array data) {
  return std::make_shared<const Array>(std::move(data));
}

void require_finite(const Array& data, const char* what) {
  if (!data.allFinite()) {
    throw NonFiniteError(std::string(what) + ": result contains non-finite values");
  }
}

bool any_grad(std::initializer_list<const Tensor*> inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

std::shared_ptr<Tape> common_tape(const std::vector<const Tensor*>& inputs) {
  std::shared_ptr<Tape> tape;
  for (const Tensor* t : inputs) {
    if (!t->requires_grad()) continue;
    if (tape && tape != t->tape()) {
      throw Error("operands are recorded on different tapes");
    }
    tape = t->tape();
  }
  return tape;
}

Tensor finish(const char* what, Shape shape, Array value, const std::vector<const Tensor*>& inputs,
              Tape::Backward fn) {
  require_finite(value, what);
  auto tape = common_tape(inputs);
  return tape->record(std::move(shape), std::move(value), inputs, std::move(fn));
}

// log1p(e) for e in [0, 1] as log(u) * e / (u - 1), u = 1 + e (Kahan).
Array log1p_unit(const Array& e) {
  const Array u = 1.0 + e;
  const Array r = u.log() * e / (u - 1.0);
  return (u == 1.0).select(e, r);
}

Array softplus_array(const Array& x) { return x.max(0.0) + log1p_unit((-x.abs()).exp()); }

Array sigmoid_array(const Array& x) {
  const Array e = (-x.abs()).exp();
  const Array p = 1.0 / (1.0 + e);
  const Array q = e * p;
  return (x >= 0.0).select(p, q);
}

const char* unary_name(UnaryOp op) {
  switch (op) {
    case UnaryOp::neg: return "neg";
    case UnaryOp::exp: return "exp";
    case UnaryOp::log: return "log";
    case UnaryOp::sqrt: return "sqrt";
    case UnaryOp::sigmoid: return "sigmoid";
    case UnaryOp::softplus: return "softplus";
    case UnaryOp::tanh: return "tanh";
    case UnaryOp::relu: return "relu";
    case UnaryOp::abs: return "abs";
  }
  return "unary";
}

const char* binary_name(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "add";
    case BinaryOp::sub: return "sub";
    case BinaryOp::mul: return "mul";
    case BinaryOp::div: return "div";
    case BinaryOp::pow: return "pow";
  }
  return "binary";
}

void accumulate_broadcast(Array* slot, const Array& contribution) {
  if (!slot) return;
  if (slot->size() == contribution.size()) {
    *slot += contribution;
  } else {
    (*slot)(0) += contribution.sum();
  }
}

}  // namespace

Index shape_size(const Shape& shape) {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : data_(make_buffer(Array::Zero(1))) {}

Tensor::Tensor(Shape shape, Array data) : shape_(std::move(shape)) {
  for (Index d : shape_) {
    if (d <= 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
  if (shape_size(shape_) != data.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  require_finite(data, "tensor");
  data_ = make_buffer(std::move(data));
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), Eigen::Map<const Array>(values.begin(), static_cast<Index>(values.size()))) {}

Tensor::Tensor(Shape shape, std::shared_ptr<const Array> data, std::shared_ptr<Tape> tape, int node)
    : shape_(std::move(shape)), data_(std::move(data)), tape_(std::move(tape)), node_(node) {}

Tensor Tensor::scalar(double value) { return Tensor({}, Array::Constant(1, value)); }

Tensor Tensor::full(Shape shape, double value) {
  const Index n = shape_size(shape);
  return Tensor(std::move(shape), Array::Constant(n, value));
}

Index Tensor::dim(Index axis) const {
  if (axis < 0 || axis >= rank()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
  }
  return shape_[static_cast<std::size_t>(axis)];
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape_));
  return (*data_)[0];
}

Eigen::Map<const RowMatrix> Tensor::matrix() const {
  if (rank() != 2) throw ShapeError("matrix view needs rank 2, got " + shape_string(shape_));
  return Eigen::Map<const RowMatrix>(data_->data(), shape_[0], shape_[1]);
}

Tensor Tensor::detach() const { return Tensor(shape_, data_, nullptr, -1); }

// ---------------------------------------------------------------------------
// Tape

std::shared_ptr<Tape> Tape::create() { return std::shared_ptr<Tape>(new Tape()); }

Tensor Tape::parameter_leaf(std::string name, Shape shape, std::shared_ptr<const Array> value) {
  Node node;
  node.size = value->size();
  node.parameter = std::move(name);
  nodes_.push_back(std::move(node));
  return Tensor(std::move(shape), std::move(value), shared_from_this(), static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::leaf(const Tensor& value) {
  if (value.requires_grad()) throw Error("leaf() expects a tensor without a tape");
  Node node;
  node.size = value.size();
  nodes_.push_back(std::move(node));
  return Tensor(value.shape(), value.buffer(), shared_from_this(), static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::record(Shape shape, Array value, const std::vector<const Tensor*>& inputs, Backward fn) {
  Node node;
  node.size = value.size();
  node.fn = std::move(fn);
  node.parents.reserve(inputs.size());
  for (const Tensor* t : inputs) {
    node.parents.push_back(t->tape().get() == this ? t->node() : -1);
  }
  nodes_.push_back(std::move(node));
  return Tensor(std::move(shape), make_buffer(std::move(value)), shared_from_this(),
                static_cast<int>(nodes_.size() - 1));
}

std::vector<Array> Tape::adjoints(const Tensor& root) const { return adjoints(root, {}); }

std::vector<Array> Tape::adjoints(const Tensor& root, std::vector<Array> seed) const {
  if (root.tape().get() != this) throw Error("backward: root is not recorded on this tape");
  if (root.size() != 1) throw ShapeError("backward: root must be scalar, got " + shape_string(root.shape()));
  std::vector<Array> adj = std::move(seed);
  adj.resize(static_cast<std::size_t>(root.node()) + 1);
  adj.back() = Array::Ones(1);
  std::vector<Array*> slots;
  for (int i = root.node(); i >= 0; --i) {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    Array& g = adj[static_cast<std::size_t>(i)];
    if (g.size() == 0 || !node.fn) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const int p = node.parents[k];
      if (p < 0) continue;
      Array& pg = adj[static_cast<std::size_t>(p)];
      if (pg.size() == 0) pg = Array::Zero(nodes_[static_cast<std::size_t>(p)].size);
      slots[k] = &pg;
    }
    node.fn(g, slots);
  }
  return adj;
}

void backward(const Tensor& root, ParameterStore& store) {
  if (!root.requires_grad()) throw Error("backward: root is not on a tape");
  const Tape& tape = *root.tape();
  // The first leaf of each parameter accumulates straight into the store's buffer.
  std::vector<Array> adj(static_cast<std::size_t>(root.node()) + 1);
  std::map<std::string, std::size_t> owner;
  for (int i = 0; i < root.node(); ++i) {
    const std::string& name = tape.parameter_name(i);
    if (name.empty() || owner.count(name)) continue;
    Array& g = store.at(name).grad;
    if (g.size() != tape.node_size(i)) throw ShapeError("gradient size mismatch for '" + name + "'");
    owner.emplace(name, static_cast<std::size_t>(i));
    adj[static_cast<std::size_t>(i)] = std::move(g);
  }
  try {
    adj = tape.adjoints(root, std::move(adj));
  } catch (...) {
    for (const auto& [name, i] : owner) store.at(name).grad = Array::Zero(tape.node_size(static_cast<int>(i)));
    throw;
  }
  for (const auto& [name, i] : owner) store.at(name).grad = std::move(adj[i]);
  for (std::size_t i = 0; i < adj.size(); ++i) {
    const std::string& name = tape.parameter_name(static_cast<int>(i));
    if (name.empty() || adj[i].size() == 0) continue;
    const auto it = owner.find(name);
    if (it != owner.end() && it->second == i) continue;
    store.accumulate_grad(name, adj[i]);
  }
}

Tensor grad(const Tensor& root, const Tensor& wrt) {
  if (!root.requires_grad()) throw Error("grad: root is not on a tape");
  if (wrt.tape() != root.tape()) return Tensor::zeros(wrt.shape());
  const std::vector<Array> adj = root.tape()->adjoints(root);
  const auto idx = static_cast<std::size_t>(wrt.node());
  if (idx >= adj.size() || adj[idx].size() == 0) return Tensor::zeros(wrt.shape());
  return Tensor(wrt.shape(), adj[idx]);
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor elementwise(UnaryOp op, const Tensor& a) {
  const Array& x = a.data();
  Array y;
  switch (op) {
    case UnaryOp::neg: y = -x; break;
    case UnaryOp::exp: y = x.exp(); break;
    case UnaryOp::log:
      if ((x <= 0).any()) throw DomainError("log of nonpositive value");
      y = x.log();
      break;
    case UnaryOp::sqrt:
      if ((x <= 0).any()) throw DomainError("sqrt of nonpositive value");
      y = x.sqrt();
      break;
    case UnaryOp::sigmoid: y = sigmoid_array(x); break;
    case UnaryOp::softplus: y = softplus_array(x); break;
    case UnaryOp::tanh: y = x.tanh(); break;
    case UnaryOp::relu: y = x.max(0.0); break;
    case UnaryOp::abs: y = x.abs(); break;
  }
  if (!a.requires_grad()) {
    require_finite(y, unary_name(op));
    return Tensor(a.shape(), std::move(y));
  }
  auto xin = a.buffer();
  auto out = std::make_shared<const Array>(y);
  Tape::Backward fn = [op, xin, out](const Array& g, const std::vector<Array*>& slots) {
    Array& gx = *slots[0];
    const Array& x = *xin;
    const Array& y = *out;
    switch (op) {
      case UnaryOp::neg: gx -= g; break;
      case UnaryOp::exp: gx += g * y; break;
      case UnaryOp::log: gx += g / x; break;
      case UnaryOp::sqrt: gx += g * 0.5 / y; break;
      case UnaryOp::sigmoid: gx += g * y * (1.0 - y); break;
      case UnaryOp::softplus: gx += g * sigmoid_array(x); break;
      case UnaryOp::tanh: gx += g * (1.0 - y.square()); break;
      case UnaryOp::relu: gx += (x > 0).select(g, 0.0); break;
      case UnaryOp::abs: gx += g * x.sign(); break;
    }
  };
  return finish(unary_name(op), a.shape(), std::move(y), {&a}, std::move(fn));
}

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  Shape shape;
  if (a.shape() == b.shape()) {
    shape = a.shape();
  } else if (a.size() == 1 && b.size() == 1) {
    shape = a.rank() >= b.rank() ? a.shape() : b.shape();
  } else if (a.size() == 1) {
    shape = b.shape();
  } else if (b.size() == 1) {
    shape = a.shape();
  } else {
    throw ShapeError(std::string(binary_name(op)) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  const Index n = shape_size(shape);
  Array a_tmp, b_tmp;
  const Array& x = a.size() == n ? a.data() : (a_tmp = Array::Constant(n, a[0]));
  const Array& w = b.size() == n ? b.data() : (b_tmp = Array::Constant(n, b[0]));

  Array y;
  switch (op) {
    case BinaryOp::add: y = x + w; break;
    case BinaryOp::sub: y = x - w; break;
    case BinaryOp::mul: y = x * w; break;
    case BinaryOp::div:
      if ((w == 0).any()) throw DomainError("division by zero");
      y = x / w;
      break;
    case BinaryOp::pow: y = x.pow(w); break;
  }
  if (!any_grad({&a, &b})) {
    require_finite(y, binary_name(op));
    return Tensor(std::move(shape), std::move(y));
  }
  auto xa = a.buffer();
  auto xb = b.buffer();
  auto out = std::make_shared<const Array>(y);
  Tape::Backward fn = [op, xa, xb, out, n](const Array& g, const std::vector<Array*>& slots) {
    auto expand = [n](const Array& v) -> Array { return v.size() == n ? v : Array::Constant(n, v[0]); };
    const Array x = expand(*xa);
    const Array w = expand(*xb);
    switch (op) {
      case BinaryOp::add:
        accumulate_broadcast(slots[0], g);
        accumulate_broadcast(slots[1], g);
        break;
      case BinaryOp::sub:
        accumulate_broadcast(slots[0], g);
        accumulate_broadcast(slots[1], -g);
        break;
      case BinaryOp::mul:
        if (slots[0]) accumulate_broadcast(slots[0], g * w);
        if (slots[1]) accumulate_broadcast(slots[1], g * x);
        break;
      case BinaryOp::div:
        if (slots[0]) accumulate_broadcast(slots[0], g / w);
        if (slots[1]) accumulate_broadcast(slots[1], -g * x / w.square());
        break;
      case BinaryOp::pow:
        if (slots[0]) accumulate_broadcast(slots[0], g * w * x.pow(w - 1.0));
        if (slots[1]) {
          const Array logs = x.max(1e-300).log();
          const Array lx = (x > 0).select(logs, 0.0);
          accumulate_broadcast(slots[1], g * (*out) * lx);
        }
        break;
    }
  };
  return finish(binary_name(op), std::move(shape), std::move(y), {&a, &b}, std::move(fn));
}

Tensor neg(const Tensor& a) { return elementwise(UnaryOp::neg, a); }
Tensor exp(const Tensor& a) { return elementwise(UnaryOp::exp, a); }
Tensor log(const Tensor& a) { return elementwise(UnaryOp::log, a); }
Tensor sqrt(const Tensor& a) { return elementwise(UnaryOp::sqrt, a); }
Tensor sigmoid(const Tensor& a) { return elementwise(UnaryOp::sigmoid, a); }
Tensor softplus(const Tensor& a) { return elementwise(UnaryOp::softplus, a); }
Tensor tanh(const Tensor& a) { return elementwise(UnaryOp::tanh, a); }
Tensor relu(const Tensor& a) { return elementwise(UnaryOp::relu, a); }
Tensor abs(const Tensor& a) { return elementwise(UnaryOp::abs, a); }
Tensor square(const Tensor& a) { return elementwise(BinaryOp::mul, a, a); }

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }
Tensor pow(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::pow, a, b); }

Tensor operator-(const Tensor& a) { return neg(a); }
Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }
Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator/(double a, const Tensor& b) { return div(Tensor::scalar(a), b); }

// ---------------------------------------------------------------------------
// Linear algebra and reductions

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul needs rank-2 operands, got " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()));
  }
  const Index m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Array y(m * n);
  Eigen::Map<RowMatrix>(y.data(), m, n).noalias() = a.matrix() * b.matrix();
  if (!any_grad({&a, &b})) {
    require_finite(y, "matmul");
    return Tensor({m, n}, std::move(y));
  }
  auto xa = a.buffer();
  auto xb = b.buffer();
  Tape::Backward fn = [xa, xb, m, k, n](const Array& g, const std::vector<Array*>& slots) {
    Eigen::Map<const RowMatrix> G(g.data(), m, n);
    if (slots[0]) {
      Eigen::Map<const RowMatrix> B(xb->data(), k, n);
      Eigen::Map<RowMatrix>(slots[0]->data(), m, k).noalias() += G * B.transpose();
    }
    if (slots[1]) {
      Eigen::Map<const RowMatrix> A(xa->data(), m, k);
      Eigen::Map<RowMatrix>(slots[1]->data(), k, n).noalias() += A.transpose() * G;
    }
  };
  return finish("matmul", {m, n}, std::move(y), {&a, &b}, std::move(fn));
}

Tensor reduce(ReduceOp op, const Tensor& a) {
  const double scale = op == ReduceOp::mean ? 1.0 / static_cast<double>(a.size()) : 1.0;
  Array y = Array::Constant(1, a.data().sum() * scale);
  if (!a.requires_grad()) return Tensor({}, std::move(y));
  const Index n = a.size();
  Tape::Backward fn = [n, scale](const Array& g, const std::vector<Array*>& slots) {
    slots[0]->segment(0, n) += g[0] * scale;
  };
  return finish(op == ReduceOp::mean ? "mean" : "sum", {}, std::move(y), {&a}, std::move(fn));
}

Tensor reduce(ReduceOp op, const Tensor& a, Index axis) {
  if (axis < 0 || axis >= a.rank()) {
    throw ShapeError("reduce: invalid axis " + std::to_string(axis) + " for shape " + shape_string(a.shape()));
  }
  const auto ax = static_cast<std::size_t>(axis);
  Index outer = 1, inner = 1;
  for (std::size_t i = 0; i < ax; ++i) outer *= a.shape()[i];
  for (std::size_t i = ax + 1; i < a.shape().size(); ++i) inner *= a.shape()[i];
  const Index len = a.shape()[ax];
  const double scale = op == ReduceOp::mean ? 1.0 / static_cast<double>(len) : 1.0;

  Shape shape = a.shape();
  shape.erase(shape.begin() + axis);
  Array y = Array::Zero(outer * inner);
  const Array& x = a.data();
  for (Index o = 0; o < outer; ++o) {
    for (Index l = 0; l < len; ++l) {
      y.segment(o * inner, inner) += x.segment((o * len + l) * inner, inner);
    }
  }
  if (scale != 1.0) y *= scale;
  if (!a.requires_grad()) return Tensor(std::move(shape), std::move(y));
  Tape::Backward fn = [outer, inner, len, scale](const Array& g, const std::vector<Array*>& slots) {
    Array& gx = *slots[0];
    for (Index o = 0; o < outer; ++o) {
      for (Index l = 0; l < len; ++l) {
        gx.segment((o * len + l) * inner, inner) += g.segment(o * inner, inner) * scale;
      }
    }
  };
  return finish(op == ReduceOp::mean ? "mean" : "sum", std::move(shape), std::move(y), {&a}, std::move(fn));
}

Tensor sum(const Tensor& a) { return reduce(ReduceOp::sum, a); }
Tensor sum(const Tensor& a, Index axis) { return reduce(ReduceOp::sum, a, axis); }
Tensor mean(const Tensor& a) { return reduce(ReduceOp::mean, a); }
Tensor mean(const Tensor& a, Index axis) { return reduce(ReduceOp::mean, a, axis); }

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  if (!a.requires_grad()) return Tensor(std::move(shape), a.data());
  Tape::Backward fn = [](const Array& g, const std::vector<Array*>& slots) { *slots[0] += g; };
  return finish("reshape", std::move(shape), a.data(), {&a}, std::move(fn));
}

Tensor flatten_batch(const Tensor& a) {
  if (a.rank() == 0) throw ShapeError("flatten_batch: tensor has no batch axis");
  const Index n = a.shape()[0];
  if (a.rank() == 2) return a;
  return reshape(a, {n, a.size() / n});
}

Tensor broadcast_rows(const Tensor& row, Index n) {
  if (n <= 0) throw ShapeError("broadcast_rows: row count must be positive");
  if (!(row.rank() == 1 || (row.rank() == 2 && row.shape()[0] == 1))) {
    throw ShapeError("broadcast_rows expects [d] or [1, d], got " + shape_string(row.shape()));
  }
  const Index d = row.size();
  Array y(n * d);
  Eigen::Map<RowMatrix>(y.data(), n, d).rowwise() = row.data().matrix().transpose();
  if (!row.requires_grad()) return Tensor({n, d}, std::move(y));
  Tape::Backward fn = [n, d](const Array& g, const std::vector<Array*>& slots) {
    slots[0]->matrix() += Eigen::Map<const RowMatrix>(g.data(), n, d).colwise().sum().transpose();
  };
  return finish("broadcast_rows", {n, d}, std::move(y), {&row}, std::move(fn));
}

Tensor tile_rows(const Tensor& a, Index times) {
  if (times <= 0) throw ShapeError("tile_rows: repeat count must be positive");
  if (a.rank() == 0) throw ShapeError("tile_rows: tensor has no batch axis");
  if (times == 1) return a;
  Shape shape = a.shape();
  shape[0] *= times;
  const Index block = a.size();
  Array y(block * times);
  for (Index t = 0; t < times; ++t) y.segment(t * block, block) = a.data();
  if (!a.requires_grad()) return Tensor(std::move(shape), std::move(y));
  Tape::Backward fn = [block, times](const Array& g, const std::vector<Array*>& slots) {
    for (Index t = 0; t < times; ++t) *slots[0] += g.segment(t * block, block);
  };
  return finish("tile_rows", std::move(shape), std::move(y), {&a}, std::move(fn));
}

Tensor slice_cols(const Tensor& a, Index begin, Index count) {
  if (a.rank() != 2) throw ShapeError("slice_cols needs rank 2, got " + shape_string(a.shape()));
  const Index n = a.shape()[0], c = a.shape()[1];
  if (begin < 0 || count <= 0 || begin + count > c) {
    throw ShapeError("slice_cols: range out of bounds for " + shape_string(a.shape()));
  }
  Array y(n * count);
  Eigen::Map<RowMatrix>(y.data(), n, count) = a.matrix().middleCols(begin, count);
  if (!a.requires_grad()) return Tensor({n, count}, std::move(y));
  Tape::Backward fn = [n, c, begin, count](const Array& g, const std::vector<Array*>& slots) {
    Eigen::Map<RowMatrix>(slots[0]->data(), n, c).middleCols(begin, count) +=
        Eigen::Map<const RowMatrix>(g.data(), n, count);
  };
  return finish("slice_cols", {n, count}, std::move(y), {&a}, std::move(fn));
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Index n = parts.front().rank() == 2 ? parts.front().shape()[0] : -1;
  Index total = 0;
  std::vector<Index> widths;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.shape()[0] != n) {
      throw ShapeError("concat_cols: inputs must be rank 2 with equal row counts");
    }
    widths.push_back(p.shape()[1]);
    total += p.shape()[1];
  }
  if (parts.size() == 1) return parts.front();
  Array y(n * total);
  Eigen::Map<RowMatrix> out(y.data(), n, total);
  Index offset = 0;
  for (const Tensor& p : parts) {
    out.middleCols(offset, p.shape()[1]) = p.matrix();
    offset += p.shape()[1];
  }
  std::vector<const Tensor*> inputs;
  for (const Tensor& p : parts) inputs.push_back(&p);
  if (std::none_of(parts.begin(), parts.end(), [](const Tensor& p) { return p.requires_grad(); })) {
    return Tensor({n, total}, std::move(y));
  }
  Tape::Backward fn = [n, total, widths](const Array& g, const std::vector<Array*>& slots) {
    Eigen::Map<const RowMatrix> G(g.data(), n, total);
    Index offset = 0;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      if (slots[i]) Eigen::Map<RowMatrix>(slots[i]->data(), n, widths[i]) += G.middleCols(offset, widths[i]);
      offset += widths[i];
    }
  };
  return finish("concat_cols", {n, total}, std::move(y), inputs, std::move(fn));
}

Tensor gather_rows(const Tensor& a, const std::vector<Index>& rows) {
  if (a.requires_grad()) throw Error("gather_rows: only constant tensors can be gathered");
  if (a.rank() == 0) throw ShapeError("gather_rows: tensor has no batch axis");
  if (rows.empty()) throw ShapeError("gather_rows: empty row selection");
  const Index n = a.shape()[0];
  const Index width = a.size() / n;
  Shape shape = a.shape();
  shape[0] = static_cast<Index>(rows.size());
  Array y(static_cast<Index>(rows.size()) * width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n) throw ShapeError("gather_rows: row index out of range");
    y.segment(static_cast<Index>(i) * width, width) = a.data().segment(rows[i] * width, width);
  }
  return Tensor(std::move(shape), std::move(y));
}

bool allclose(const Tensor& a, const Tensor& b, double rtol, double atol) {
  if (a.shape() != b.shape()) return false;
  return ((a.data() - b.data()).abs() <= atol + rtol * b.data().abs()).all();
}

}  // namespace dgm
