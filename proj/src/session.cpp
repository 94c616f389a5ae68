// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/session.hpp"

namespace dgm {

Session::Session(Rng& rng, bool record_gradients)
    : rng_(&rng), tape_(record_gradients ? Tape::create() : nullptr) {}

Tensor Session::param(const ParameterStore& store, const std::string& name) {
  const Parameter& p = store.at(name);
  if (!tape_ || frozen(name)) return Tensor(p.shape, *p.value);
  return tape_->parameter_leaf(name, p.shape, p.value);
}

Session::FreezeGuard::FreezeGuard(Session& session, const std::vector<std::string>& names) : session_(session) {
  for (const auto& n : names) {
    session_.frozen_.insert(n);
    added_.push_back(n);
  }
  ++session_.generation_;
}

Session::FreezeGuard::~FreezeGuard() {
  for (const auto& n : added_) session_.frozen_.erase(session_.frozen_.find(n));
  ++session_.generation_;
}

std::vector<std::pair<const void*, int>> Session::identity(const TensorMap& inputs) {
  std::vector<std::pair<const void*, int>> ids;
  ids.reserve(inputs.size());
  for (const auto& [name, t] : inputs) ids.emplace_back(t.buffer().get(), t.node());
  return ids;
}

const TensorMap* Session::cached(const CacheKey& key) const {
  auto it = cache_.find(key);
  return it == cache_.end() ? nullptr : &it->second.second;
}

void Session::store(CacheKey key, const TensorMap& inputs, TensorMap value) {
  cache_.emplace(std::move(key), std::make_pair(inputs, std::move(value)));
}

ParamRef::ParamRef(Tensor fixed) : fixed_(fixed.detach()) {}

ParamRef::ParamRef(std::shared_ptr<ParameterStore> store, std::string name)
    : store_(std::move(store)), name_(std::move(name)) {
  if (!store_ || !store_->contains(name_)) throw ConfigError("ParamRef: unknown parameter '" + name_ + "'");
}

Tensor ParamRef::get(Session& session) const { return store_ ? session.param(*store_, name_) : fixed_; }

Tensor ParamRef::value() const { return store_ ? store_->value(name_) : fixed_; }

std::optional<std::string> ParamRef::parameter_name() const {
  if (store_) return name_;
  return std::nullopt;
}

}  // namespace dgm
