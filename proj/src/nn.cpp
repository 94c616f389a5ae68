// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/nn.hpp"

#include <cmath>

namespace dgm {

Tensor activate(Activation act, const Tensor& x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::softplus: return softplus(x);
    case Activation::sigmoid: return sigmoid(x);
  }
  return x;
}

Mlp::Mlp(std::shared_ptr<ParameterStore> store, std::string prefix, std::vector<Index> sizes, Activation hidden,
         Rng& init)
    : store_(std::move(store)), sizes_(std::move(sizes)), hidden_(hidden) {
  if (sizes_.size() < 2) throw ConfigError("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes_.size(); ++i) {
    const Index fan_in = sizes_[i], fan_out = sizes_[i + 1];
    if (fan_in <= 0 || fan_out <= 0) throw ConfigError("Mlp layer sizes must be positive");
    // Glorot uniform.
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Array w(fan_in * fan_out);
    for (Index k = 0; k < w.size(); ++k) w[k] = (2.0 * init.uniform01() - 1.0) * limit;
    const std::string wname = prefix + ".w" + std::to_string(i);
    const std::string bname = prefix + ".b" + std::to_string(i);
    store_->add(wname, Tensor({fan_in, fan_out}, std::move(w)));
    store_->add(bname, Tensor::zeros({fan_out}));
    names_.push_back(wname);
    names_.push_back(bname);
  }
}

Tensor Mlp::forward(const Tensor& x, Session& session) const {
  Tensor h = flatten_batch(x);
  if (h.shape()[1] != input_dim()) {
    throw ShapeError("Mlp: expected " + std::to_string(input_dim()) + " input features, got " +
                     shape_string(x.shape()));
  }
  const std::size_t layers = names_.size() / 2;
  for (std::size_t i = 0; i < layers; ++i) {
    const Tensor w = session.param(*store_, names_[2 * i]);
    const Tensor b = session.param(*store_, names_[2 * i + 1]);
    h = matmul(h, w) + broadcast_rows(b, h.shape()[0]);
    if (i + 1 < layers) h = activate(hidden_, h);
  }
  return h;
}

}  // namespace dgm
