// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace dgm {

namespace {

void loss_parameters(const LossExpr& e, std::set<std::string>& out) {
  const LossNode& n = e.node();
  for (const DistPtr* d : {&n.dist, &n.other}) {
    if (*d) {
      for (const auto& name : (*d)->parameters()) out.insert(name);
    }
  }
  for (const auto& c : n.children) loss_parameters(c, out);
}

}  // namespace

Model::Model(std::shared_ptr<ParameterStore> store, LossExpr loss, std::vector<DistPtr> trainables,
             OptimizerConfig optimizer)
    : Model(std::move(store), {Phase{"loss", std::move(loss), std::move(trainables), optimizer}}) {}

Model::Model(std::shared_ptr<ParameterStore> store, std::vector<Phase> phases)
    : store_(std::move(store)), phases_(std::move(phases)) {
  if (!store_) throw ConfigError("model: null parameter store");
  if (phases_.empty()) throw ConfigError("model: needs at least one phase");
  for (const auto& p : phases_) {
    if (p.loss.contract() != Contract::scalar) {
      throw ConfigError("model: loss of phase '" + p.name + "' is per-example; wrap it in mean() or sum()");
    }
    if (p.trainables.empty()) throw ConfigError("model: phase '" + p.name + "' has no trainable distributions");
    p.optimizer.validate();
    std::set<std::string> reachable;
    loss_parameters(p.loss, reachable);
    std::vector<std::string> names;
    for (const auto& d : p.trainables) {
      if (!d) throw ConfigError("model: null trainable distribution");
      bool any = false;
      for (const auto& n : d->parameters()) {
        if (!store_->contains(n)) throw ConfigError("model: parameter '" + n + "' is not in the store");
        any = any || reachable.count(n) != 0;
        if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
      }
      if (!any) warn("model: " + d->spec().atom() + " has no parameters reachable from loss of phase '" + p.name + "'");
    }
    phase_params_.push_back(std::move(names));
  }
  phase_steps_.assign(phases_.size(), 0);
}

void Model::set_mc_samples(int n) {
  if (n < 1) throw ConfigError("model: mc_samples must be at least 1");
  mc_samples_ = n;
}

EvalContext Model::context(const SampleMap& batch) const {
  EvalContext ctx;
  ctx.data = batch;
  ctx.placeholders = placeholders_;
  ctx.mc_samples = mc_samples_;
  if (!batch.empty()) ctx.batch_size = batch_size(batch);
  return ctx;
}

void Model::note(const char* event) const {
  if (trace_) trace_->events.emplace_back(event);
}

double Model::train(const SampleMap& batch, Rng& rng) {
  const EvalContext ctx = context(batch);
  const bool multi = phases_.size() > 1;
  std::map<std::string, Parameter> snapshot;
  if (multi) {
    for (const auto& names : phase_params_) {
      for (const auto& n : names) snapshot.emplace(n, store_->at(n));
    }
  }
  const std::vector<long> saved_steps = phase_steps_;
  double first = 0.0;
  try {
    for (std::size_t i = 0; i < phases_.size(); ++i) {
      const auto& names = phase_params_[i];
      store_->zero_grad();
      note("zero_grad");
      Session session(rng, true);
      const Tensor value = eval(phases_[i].loss, ctx, session);
      note("eval");
      const double loss = value.item();
      if (!std::isfinite(loss)) throw NonFiniteError("model: non-finite loss in phase '" + phases_[i].name + "'");
      if (i == 0) first = loss;
      backward(value, *store_);
      note("backward");
      for (const auto& n : names) {
        if (!store_->at(n).grad.allFinite()) {
          throw NonFiniteError("model: non-finite gradient for '" + n + "' in phase '" + phases_[i].name + "'");
        }
      }
      optimizer_step(phases_[i].optimizer, *store_, names, ++phase_steps_[i]);
      note("step");
    }
  } catch (...) {
    for (auto& [n, p] : snapshot) store_->at(n) = p;
    phase_steps_ = saved_steps;
    throw;
  }
  ++steps_;
  return first;
}

double Model::test(const SampleMap& batch, Rng& rng) const {
  const EvalContext ctx = context(batch);
  Session session(rng, false);
  return eval(phases_.front().loss, ctx, session).item();
}

LossExpr vae_loss(const DistPtr& q, const DistPtr& p, const DistPtr& prior, KlMode mode) {
  if (mode == KlMode::analytical) return mean(-(expectation(q, log_prob(p)) - kl_normal(q, prior)));
  return mean(-expectation(q, (log_prob(p) + log_prob(prior)) - log_prob(q)));
}

Model vae_model(std::shared_ptr<ParameterStore> store, DistPtr q, DistPtr p, DistPtr prior, OptimizerConfig optimizer,
                KlMode mode) {
  LossExpr loss = vae_loss(q, p, prior, mode);
  return Model(std::move(store), std::move(loss), {std::move(p), std::move(q)}, optimizer);
}

Model gan_model(std::shared_ptr<ParameterStore> store, DistPtr generator, const std::string& data_var,
                DistPtr discriminator, OptimizerConfig optimizer_g, OptimizerConfig optimizer_d) {
  auto [gen_loss, disc_loss] = adversarial_pair(data_var, generator, discriminator);
  std::vector<Phase> phases;
  phases.push_back(Phase{"discriminator", disc_loss, {discriminator}, optimizer_d});
  phases.push_back(Phase{"generator", gen_loss, {generator}, optimizer_g});
  return Model(std::move(store), std::move(phases));
}

}  // namespace dgm
