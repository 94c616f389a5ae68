// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dgm/session.hpp"

namespace dgm {

enum class Activation { identity, relu, tanh, softplus, sigmoid };

Tensor activate(Activation act, const Tensor& x);

/// Fully connected stack; the last layer has no activation. Parameters are
/// registered as `<prefix>.w<i>` ([in, out]) and `<prefix>.b<i>` ([out]).
class Mlp {
 public:
  Mlp(std::shared_ptr<ParameterStore> store, std::string prefix, std::vector<Index> sizes, Activation hidden,
      Rng& init);

  /// x: [n, in] -> [n, out]
  Tensor forward(const Tensor& x, Session& session) const;

  const std::vector<std::string>& parameters() const { return names_; }
  Index input_dim() const { return sizes_.front(); }
  Index output_dim() const { return sizes_.back(); }

 private:
  std::shared_ptr<ParameterStore> store_;
  std::vector<Index> sizes_;
  Activation hidden_;
  std::vector<std::string> names_;
};

}  // namespace dgm
