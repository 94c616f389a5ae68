// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "dgm/parameters.hpp"

namespace dgm {

struct OptimizerConfig {
  enum class Kind { sgd, adam };

  Kind kind = Kind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerConfig sgd(double lr) { return {Kind::sgd, lr}; }
  static OptimizerConfig adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8) {
    return {Kind::adam, lr, beta1, beta2, epsilon};
  }

  /// Throws ConfigError. A learning rate of exactly 0 is accepted (frozen training).
  void validate() const;
};

/// One update of the named parameters from their accumulated gradients.
/// `step` is the 1-based update count used for Adam's bias correction.
void optimizer_step(const OptimizerConfig& cfg, ParameterStore& store, const std::vector<std::string>& names,
                    long step);

/// Updates every parameter in the store.
void optimizer_step(const OptimizerConfig& cfg, ParameterStore& store, long step);

}  // namespace dgm
