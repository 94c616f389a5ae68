// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/gradcheck.hpp"

namespace dgm {

GradientMap finite_diff_grad(const std::function<double(const ParameterStore&)>& f, ParameterStore& store,
                             double eps, const std::vector<std::string>& names) {
  if (!(eps > 0.0)) throw ConfigError("finite_diff_grad: eps must be > 0");
  GradientMap out;
  for (const auto& name : names.empty() ? store.names() : names) {
    Parameter& p = store.at(name);
    const auto original = p.value;
    Array g(original->size());
    for (Index i = 0; i < original->size(); ++i) {
      Array probe = *original;
      probe[i] = (*original)[i] + eps;
      p.value = std::make_shared<const Array>(probe);
      const double up = f(store);
      probe[i] = (*original)[i] - eps;
      p.value = std::make_shared<const Array>(probe);
      const double down = f(store);
      g[i] = (up - down) / (2.0 * eps);
    }
    p.value = original;
    out.emplace(name, std::move(g));
  }
  return out;
}

GradientMap gradients(const ParameterStore& store) {
  GradientMap out;
  for (const auto& [name, p] : store.entries()) out.emplace(name, p.grad);
  return out;
}

}  // namespace dgm
