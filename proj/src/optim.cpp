// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/optim.hpp"

#include <cmath>

namespace dgm {

void OptimizerConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (kind == Kind::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  }
}

void optimizer_step(const OptimizerConfig& cfg, ParameterStore& store, const std::vector<std::string>& names,
                    long step) {
  cfg.validate();
  if (cfg.kind == OptimizerConfig::Kind::adam && step < 1) throw ConfigError("adam step index must be >= 1");
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (const auto& name : names) {
    Parameter& p = store.at(name);
    Array next;
    switch (cfg.kind) {
      case OptimizerConfig::Kind::sgd:
        next = *p.value - cfg.lr * p.grad;
        break;
      case OptimizerConfig::Kind::adam:
        p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
        p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * p.grad.square();
        next = *p.value - cfg.lr * (p.m / bias1) / ((p.v / bias2).sqrt() + cfg.epsilon);
        break;
    }
    p.value = std::make_shared<const Array>(std::move(next));
  }
}

void optimizer_step(const OptimizerConfig& cfg, ParameterStore& store, long step) {
  optimizer_step(cfg, store, store.names(), step);
}

}  // namespace dgm
