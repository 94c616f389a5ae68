// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dgm/distribution.hpp"

namespace dgm {

/// Maps the conditioning entries of a sample map to named outputs (parameter
/// roles for Normal and Bernoulli, variables for Deterministic). Every output
/// shares the input batch dimension.
struct ParamNetwork {
  std::function<TensorMap(const SampleMap& cond, Session& session)> fn;
  std::vector<std::string> parameters;
};

/// How raw network outputs become distribution parameters.
enum class Link {
  /// Normal scale through softplus, Bernoulli probs read as logits.
  constrained,
  /// Outputs are used as given and validated.
  none,
};

class Normal : public Distribution {
 public:
  /// Fixed or store-backed parameters with event shape [d] (size-1 values broadcast).
  /// Fixed scales in (0, 1e-12) are raised to 1e-12 with a warning.
  Normal(DistSpec spec, ParamRef loc, ParamRef scale);
  /// Network producing roles `loc` and `scale`.
  Normal(DistSpec spec, ParamNetwork network, Link link = Link::constrained);

  struct Params {
    Tensor loc;    // [batch, d]
    Tensor scale;  // [batch, d], strictly positive
  };
  Params params(const SampleMap& input, Index batch, Session& session) const;

  SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const override;
  Tensor log_prob(const SampleMap& values, Session& session) const override;
  std::vector<std::string> parameters() const override;

 private:
  ParamRef loc_, scale_;
  ParamNetwork network_;
  Link link_ = Link::constrained;
  bool networked_ = false;
};

class Bernoulli : public Distribution {
 public:
  /// Fixed probabilities in (0, 1), event shape [d].
  Bernoulli(DistSpec spec, ParamRef probs);
  /// Network producing role `probs`.
  Bernoulli(DistSpec spec, ParamNetwork network, Link link = Link::constrained);

  /// Log-odds, [batch, d].
  Tensor logits(const SampleMap& input, Index batch, Session& session) const;

  /// Bernoulli draws are not differentiable: reparam with a recording session throws.
  SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const override;
  Tensor log_prob(const SampleMap& values, Session& session) const override;
  std::vector<std::string> parameters() const override;

 private:
  ParamRef probs_;
  ParamNetwork network_;
  Link link_ = Link::constrained;
  bool networked_ = false;
};

/// Point mass at a deterministic function of the conditioning variables.
class Deterministic : public Distribution {
 public:
  Deterministic(DistSpec spec, ParamNetwork mapping);

  SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const override;
  /// Always throws UnsupportedOperation.
  Tensor log_prob(const SampleMap& values, Session& session) const override;
  std::vector<std::string> parameters() const override { return mapping_.parameters; }

 private:
  ParamNetwork mapping_;
};

std::shared_ptr<const Normal> make_normal(DistSpec spec, ParamRef loc, ParamRef scale);
std::shared_ptr<const Normal> make_normal(DistSpec spec, ParamNetwork network, Link link = Link::constrained);
std::shared_ptr<const Bernoulli> make_bernoulli(DistSpec spec, ParamRef probs);
std::shared_ptr<const Bernoulli> make_bernoulli(DistSpec spec, ParamNetwork network, Link link = Link::constrained);
std::shared_ptr<const Deterministic> make_deterministic(DistSpec spec, ParamNetwork mapping);

/// Standard normal over `var` with event size `dim`.
std::shared_ptr<const Normal> standard_normal_prior(const std::string& var, Index dim, std::string symbol = "p");

}  // namespace dgm
