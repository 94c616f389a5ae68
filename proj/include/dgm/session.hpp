// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dgm/parameters.hpp"
#include "dgm/rng.hpp"
#include "dgm/tensor.hpp"

namespace dgm {

using TensorMap = std::map<std::string, Tensor>;

/// State of one evaluation: the random stream, the tape (absent when
/// gradients are not recorded) and a memo of distribution parameters so a
/// network runs once per distinct input within the evaluation.
class Session {
 public:
  Session(Rng& rng, bool record_gradients);

  Rng& rng() { return *rng_; }
  bool recording() const { return tape_ != nullptr; }
  const std::shared_ptr<Tape>& tape() const { return tape_; }

  /// A parameter as it enters the computation: a tape leaf while recording and
  /// not frozen, a constant otherwise.
  Tensor param(const ParameterStore& store, const std::string& name);

  bool frozen(const std::string& name) const { return frozen_.count(name) != 0; }

  /// Treats the named parameters as constants for the guard's lifetime.
  class FreezeGuard {
   public:
    FreezeGuard(Session& session, const std::vector<std::string>& names);
    ~FreezeGuard();
    FreezeGuard(const FreezeGuard&) = delete;
    FreezeGuard& operator=(const FreezeGuard&) = delete;

   private:
    Session& session_;
    std::vector<std::string> added_;
  };

  using CacheKey = std::tuple<const void*, std::vector<std::pair<const void*, int>>, unsigned>;
  static std::vector<std::pair<const void*, int>> identity(const TensorMap& inputs);

  const TensorMap* cached(const CacheKey& key) const;
  /// `inputs` is retained so the buffer addresses in the key stay unique.
  void store(CacheKey key, const TensorMap& inputs, TensorMap value);
  unsigned generation() const { return generation_; }

 private:
  Rng* rng_;
  std::shared_ptr<Tape> tape_;
  std::multiset<std::string> frozen_;
  unsigned generation_ = 0;
  std::map<CacheKey, std::pair<TensorMap, TensorMap>> cache_;
};

/// A tensor that is either fixed or read from a parameter store.
class ParamRef {
 public:
  ParamRef() = default;
  ParamRef(Tensor fixed);  // NOLINT(google-explicit-constructor)
  ParamRef(std::shared_ptr<ParameterStore> store, std::string name);

  Tensor get(Session& session) const;
  /// Current value, no tape.
  Tensor value() const;
  std::optional<std::string> parameter_name() const;

 private:
  Tensor fixed_;
  std::shared_ptr<ParameterStore> store_;
  std::string name_;
};

}  // namespace dgm
