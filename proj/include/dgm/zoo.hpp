// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>

#include "dgm/families.hpp"
#include "dgm/flows.hpp"
#include "dgm/loss.hpp"
#include "dgm/nn.hpp"
#include "dgm/product.hpp"

namespace dgm {

struct VaeConfig {
  Index x_dim = 64;
  Index z_dim = 2;
  Index h_dim = 32;
  Activation hidden = Activation::softplus;
  std::uint64_t seed = 0;
};

/// q(z|x) = N(loc, softplus(raw)) from an x -> h -> 2z network; p(x|z) is a
/// Bernoulli whose logits come from a z -> h -> x network; p(z) = N(0, I).
struct Vae {
  std::shared_ptr<ParameterStore> store;
  std::shared_ptr<const Normal> q;
  std::shared_ptr<const Bernoulli> p;
  std::shared_ptr<const Normal> prior;
  /// p(x,z) = p(x|z)p(z)
  std::shared_ptr<const Product> joint;
};

Vae build_vae(const VaeConfig& cfg);

struct GanConfig {
  /// Generator x = scale * z + shift, z ~ N(0, 1).
  double gen_scale = 1.0;
  double gen_shift = 0.0;
  Index disc_hidden = 16;
  std::uint64_t seed = 0;
};

/// One-dimensional GAN: generator p(x) pushes N(z; 0, 1) through an affine
/// flow; discriminator d(t|x) is a Bernoulli with an x -> h -> 1 tanh network.
struct Gan {
  std::shared_ptr<ParameterStore> store;
  std::shared_ptr<const TransformedDist> generator;
  std::shared_ptr<const Bernoulli> discriminator;
};

Gan build_gan(const GanConfig& cfg);

/// One-dimensional p(x) = affine then planar flow over N(z; 0, 1).
struct FlowModel {
  std::shared_ptr<ParameterStore> store;
  std::shared_ptr<const TransformedDist> dist;
};

FlowModel build_flow(std::uint64_t seed);

/// Semi-supervised composite: classifier q(y|x), encoder q(z|x), decoder
/// p(x|z), prior p(z). The loss adds the classifier's negative
/// log-likelihood, the negative ELBO and a beta-weighted KL term.
struct Composite {
  Vae vae;
  std::shared_ptr<const Bernoulli> classifier;
  LossExpr loss = 0.0;
};

Composite build_composite(const VaeConfig& cfg);

}  // namespace dgm
