// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dgm/tensor.hpp"

namespace dgm {

/// Trainable tensor with its gradient accumulator and Adam moment slots.
/// All four share `shape`.
struct Parameter {
  Shape shape;
  std::shared_ptr<const Array> value;
  Array grad;
  Array m;
  Array v;
};

/// Named parameters, iterated in name order.
class ParameterStore {
 public:
  /// Registers a new parameter; the name must be unused.
  void add(const std::string& name, const Tensor& init);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  const Parameter& at(const std::string& name) const;
  Parameter& at(const std::string& name);

  /// Current value as a constant tensor.
  Tensor value(const std::string& name) const;
  void set_value(const std::string& name, const Tensor& value);
  Tensor gradient(const std::string& name) const;

  void accumulate_grad(const std::string& name, const Array& g);
  void zero_grad();
  void zero_grad(const std::vector<std::string>& names);

  std::vector<std::string> names() const;
  std::size_t size() const { return params_.size(); }
  Index total_size() const;

  const std::map<std::string, Parameter>& entries() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

}  // namespace dgm
