// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dgm/distribution.hpp"

namespace dgm {

/// Joint distribution as a product of factors. A name shared between a
/// factor that defines it and factors conditioned on it is one variable; the
/// resulting dependency graph must be acyclic and every variable must have a
/// single defining factor.
class Product : public Distribution {
 public:
  /// Nested products are flattened. `symbol` defaults to the first factor's.
  explicit Product(std::vector<DistPtr> factors, std::string symbol = "");

  const std::vector<DistPtr>& factors() const { return factors_; }
  /// Factor indices in sampling order: parents before children, ties in construction order.
  const std::vector<std::size_t>& ancestral_order() const { return order_; }

  /// (variable, parents) for every defined variable, in ancestral order.
  std::vector<std::pair<std::string, std::vector<std::string>>> graph() const;

  SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const override;
  /// Sum of factor log-probs, accumulated in construction order.
  Tensor log_prob(const SampleMap& values, Session& session) const override;
  std::vector<std::string> parameters() const override;

  /// `p(x,z) = p(x|z)p(z)`
  std::string text() const override;
  std::string latex() const override;

 private:
  Product(std::vector<DistPtr> flat, std::string symbol, int);
  std::string factorization(bool latex) const;

  std::vector<DistPtr> factors_;
  std::vector<std::size_t> order_;
};

std::shared_ptr<const Product> product(std::vector<DistPtr> factors, std::string symbol = "");

DistPtr operator*(const DistPtr& a, const DistPtr& b);

}  // namespace dgm
