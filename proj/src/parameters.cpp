// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/parameters.hpp"

namespace dgm {

void ParameterStore::add(const std::string& name, const Tensor& init) {
  if (name.empty()) throw ConfigError("parameter name must be nonempty");
  if (contains(name)) throw ConfigError("parameter '" + name + "' already exists");
  const Index n = init.size();
  params_.emplace(name, Parameter{init.shape(), init.buffer(), Array::Zero(n), Array::Zero(n), Array::Zero(n)});
}

const Parameter& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

Tensor ParameterStore::value(const std::string& name) const {
  const Parameter& p = at(name);
  return Tensor(p.shape, *p.value);
}

void ParameterStore::set_value(const std::string& name, const Tensor& value) {
  Parameter& p = at(name);
  if (value.shape() != p.shape) {
    throw ShapeError("set_value: shape " + shape_string(value.shape()) + " differs from parameter shape " +
                     shape_string(p.shape));
  }
  p.value = value.buffer();
}

Tensor ParameterStore::gradient(const std::string& name) const {
  const Parameter& p = at(name);
  return Tensor(p.shape, p.grad);
}

void ParameterStore::accumulate_grad(const std::string& name, const Array& g) {
  Parameter& p = at(name);
  if (g.size() != p.grad.size()) throw ShapeError("gradient size mismatch for '" + name + "'");
  p.grad += g;
}

void ParameterStore::zero_grad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

void ParameterStore::zero_grad(const std::vector<std::string>& names) {
  for (const auto& name : names) at(name).grad.setZero();
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, p] : params_) out.push_back(name);
  return out;
}

Index ParameterStore::total_size() const {
  Index n = 0;
  for (const auto& [name, p] : params_) n += p.value->size();
  return n;
}

}  // namespace dgm
