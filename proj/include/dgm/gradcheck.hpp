// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dgm/parameters.hpp"

namespace dgm {

using GradientMap = std::map<std::string, Array>;

/// Central differences (f(θ+eps) − f(θ−eps)) / (2 eps), one coordinate at a
/// time. `f` must be deterministic for a fixed store; the store is restored.
GradientMap finite_diff_grad(const std::function<double(const ParameterStore&)>& f, ParameterStore& store,
                             double eps, const std::vector<std::string>& names = {});

/// Copies of the gradient accumulators.
GradientMap gradients(const ParameterStore& store);

}  // namespace dgm
