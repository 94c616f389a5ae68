// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dgm/loss.hpp"
#include "dgm/optim.hpp"

namespace dgm {

/// One optimization phase: a scalar loss, the distributions it updates and
/// their optimizer.
struct Phase {
  std::string name;
  LossExpr loss;
  std::vector<DistPtr> trainables;
  OptimizerConfig optimizer;
};

/// Ordered log of what a train call did ("zero_grad", "eval", "backward", "step").
struct TrainTrace {
  std::vector<std::string> events;
};

class Model {
 public:
  Model(std::shared_ptr<ParameterStore> store, LossExpr loss, std::vector<DistPtr> trainables,
        OptimizerConfig optimizer);
  /// Phases run in order on every train call.
  Model(std::shared_ptr<ParameterStore> store, std::vector<Phase> phases);

  /// Runs every phase once and returns the first phase's loss, measured
  /// before its update. On any error all parameters and optimizer state are
  /// left as they were before the call.
  double train(const SampleMap& batch, Rng& rng);
  /// First-phase loss without recording or updates.
  double test(const SampleMap& batch, Rng& rng) const;

  long steps() const { return steps_; }
  const std::vector<Phase>& phases() const { return phases_; }
  const LossExpr& loss() const { return phases_.front().loss; }
  /// Store parameters updated by phase `i`.
  const std::vector<std::string>& phase_parameters(std::size_t i) const { return phase_params_.at(i); }
  ParameterStore& store() { return *store_; }
  const ParameterStore& store() const { return *store_; }

  int mc_samples() const { return mc_samples_; }
  void set_mc_samples(int n);
  void set_placeholders(std::map<std::string, double> values) { placeholders_ = std::move(values); }
  /// Records the events of subsequent train calls; null disables.
  void set_trace(TrainTrace* trace) { trace_ = trace; }

 private:
  EvalContext context(const SampleMap& batch) const;
  void note(const char* event) const;

  std::shared_ptr<ParameterStore> store_;
  std::vector<Phase> phases_;
  std::vector<std::vector<std::string>> phase_params_;
  std::vector<long> phase_steps_;
  long steps_ = 0;
  int mc_samples_ = 1;
  std::map<std::string, double> placeholders_;
  TrainTrace* trace_ = nullptr;
};

enum class KlMode { analytical, monte_carlo };

/// mean(-(E_q[log p(x|z)] - D_KL[q||prior])) or mean(-E_q[log p(x|z) + log prior(z) - log q(z|x)]).
LossExpr vae_loss(const DistPtr& q, const DistPtr& p, const DistPtr& prior, KlMode mode);
Model vae_model(std::shared_ptr<ParameterStore> store, DistPtr q, DistPtr p, DistPtr prior, OptimizerConfig optimizer,
                KlMode mode);

/// Two phases per train call: discriminator on its loss, then generator on
/// the non-saturating generator loss.
Model gan_model(std::shared_ptr<ParameterStore> store, DistPtr generator, const std::string& data_var,
                DistPtr discriminator, OptimizerConfig optimizer_g, OptimizerConfig optimizer_d);

}  // namespace dgm
