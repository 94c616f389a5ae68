// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dgm/distribution.hpp"

namespace dgm {

/// Invertible map between [batch, d] tensors.
class FlowLayer {
 public:
  explicit FlowLayer(std::string name) : name_(std::move(name)) {}
  virtual ~FlowLayer() = default;

  const std::string& name() const { return name_; }

  virtual Tensor forward(const Tensor& z, Session& session) const = 0;
  virtual Tensor inverse(const Tensor& x, Session& session) const = 0;
  /// log|det ∂forward/∂z| at `z`, shape [batch].
  virtual Tensor log_det(const Tensor& z, Session& session) const = 0;
  virtual std::vector<std::string> parameters() const { return {}; }

 private:
  std::string name_;
};

using FlowPtr = std::shared_ptr<const FlowLayer>;

/// x = a ⊙ z + b; every entry of a must be nonzero.
class AffineFlow : public FlowLayer {
 public:
  AffineFlow(std::string name, ParamRef scale, ParamRef shift);

  Tensor forward(const Tensor& z, Session& session) const override;
  Tensor inverse(const Tensor& x, Session& session) const override;
  Tensor log_det(const Tensor& z, Session& session) const override;
  std::vector<std::string> parameters() const override;

 private:
  Tensor scale_rows(Session& session, Index batch, Index dim) const;
  Tensor shift_rows(Session& session, Index batch, Index dim) const;

  ParamRef scale_, shift_;
};

/// x = z + û tanh(wᵀz + b) with û = u + (m(wᵀu) − wᵀu) w / ‖w‖², m(a) = −1 + softplus(a).
/// The correction keeps wᵀû > −1, which makes the map strictly monotone along w
/// and hence invertible. The inverse solves the scalar equation along w to
/// machine precision, then takes one Newton step on the tape so gradients
/// match the implicit-function derivative.
class PlanarFlow : public FlowLayer {
 public:
  /// u, w: [d]; b: [1].
  PlanarFlow(std::string name, ParamRef u, ParamRef w, ParamRef b);

  Tensor forward(const Tensor& z, Session& session) const override;
  Tensor inverse(const Tensor& x, Session& session) const override;
  Tensor log_det(const Tensor& z, Session& session) const override;
  std::vector<std::string> parameters() const override;

 private:
  struct Terms {
    Tensor u_hat;  // [d]
    Tensor w;      // [d]
    Tensor b;      // scalar
  };
  Terms terms(Session& session) const;

  ParamRef u_, w_, b_;
};

/// Pushes base draws through an ordered flow stack: x = f_K(…f_1(z)).
/// Densities use the pull-back log p(x) = log p0(f⁻¹(x)) − Σ_k log|det ∂f_k|.
class FlowDistribution : public Distribution {
 public:
  FlowDistribution(DistSpec spec, DistPtr base, std::vector<FlowPtr> flows);

  const DistPtr& base() const { return base_; }
  const std::vector<FlowPtr>& flows() const { return flows_; }

  SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const override;
  Tensor log_prob(const SampleMap& values, Session& session) const override;
  std::vector<std::string> parameters() const override;

 private:
  DistPtr base_;
  std::vector<FlowPtr> flows_;
};

/// Sampling-oriented flow distribution.
class TransformedDist : public FlowDistribution {
 public:
  using FlowDistribution::FlowDistribution;
};

/// Scoring-oriented flow distribution: log p(x) = log p0(f(x)) + log|det ∂f/∂x|
/// with f the inverse of the stack.
class InverseTransformedDist : public FlowDistribution {
 public:
  using FlowDistribution::FlowDistribution;
};

std::shared_ptr<const AffineFlow> affine_flow(std::string name, ParamRef scale, ParamRef shift);
std::shared_ptr<const PlanarFlow> planar_flow(std::string name, ParamRef u, ParamRef w, ParamRef b);

Tensor flow_forward(const FlowLayer& layer, const Tensor& input);
Tensor flow_inverse(const FlowLayer& layer, const Tensor& input);
Tensor flow_log_det(const FlowLayer& layer, const Tensor& input);

}  // namespace dgm
