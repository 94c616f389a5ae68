// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dgm/session.hpp"

namespace dgm {

/// Variable name -> realization. Every entry shares the leading (batch) dimension.
using SampleMap = TensorMap;

/// Leading dimension shared by all entries. Throws on an empty map or a conflict.
Index batch_size(const SampleMap& map);

/// Identifier without whitespace and without the reserved characters `|`, `,` and `=`.
void validate_var_name(const std::string& name);

/// Display symbol plus the variables a distribution defines and conditions on.
struct DistSpec {
  DistSpec(std::string symbol, std::vector<std::string> var, std::vector<std::string> cond_var = {});

  std::string symbol;
  std::vector<std::string> var;
  std::vector<std::string> cond_var;

  /// `p(x|z,y)`, or `p(x)` without conditioning variables.
  std::string atom() const;
};

/// Uniform interface over every way of defining a distribution: closed-form
/// families with fixed or network-produced parameters, deterministic maps,
/// products and flow transforms.
class Distribution {
 public:
  explicit Distribution(DistSpec spec) : spec_(std::move(spec)) {}
  virtual ~Distribution() = default;

  const DistSpec& spec() const { return spec_; }
  const std::vector<std::string>& var() const { return spec_.var; }
  const std::vector<std::string>& cond_var() const { return spec_.cond_var; }
  const std::string& symbol() const { return spec_.symbol; }

  /// Returns `input` plus one entry per defined variable. With an empty input
  /// `batch_n` sets the batch size, otherwise it must equal the input's.
  virtual SampleMap sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const = 0;

  /// Per-example log density or mass, summed over event dimensions: shape [batch].
  virtual Tensor log_prob(const SampleMap& values, Session& session) const = 0;

  /// Names of the store parameters this distribution reads.
  virtual std::vector<std::string> parameters() const { return {}; }

  virtual std::string text() const { return spec_.atom(); }
  virtual std::string latex() const { return spec_.atom(); }

 protected:
  /// The conditioning entries of `input`; throws MissingVariable naming every absent one.
  SampleMap conditions(const SampleMap& input) const;
  Index resolve_batch(const SampleMap& input, Index batch_n) const;
  /// values[name] as [batch, event] with a checked batch dimension.
  static Tensor event_matrix(const SampleMap& values, const std::string& name, Index batch);

 private:
  DistSpec spec_;
};

using DistPtr = std::shared_ptr<const Distribution>;

/// Samples with reparameterization enabled exactly when the session records gradients.
SampleMap sample(const Distribution& dist, const SampleMap& input, Index batch_n, Session& session);
/// Gradient-free ancestral sampling from a fresh stream position.
SampleMap sample(const Distribution& dist, const SampleMap& input, Index batch_n, Rng& rng);

Tensor get_log_prob(const Distribution& dist, const SampleMap& values, Session& session);
Tensor get_log_prob(const Distribution& dist, const SampleMap& values);

inline std::string format_text(const Distribution& dist) { return dist.text(); }
inline std::string format_latex(const Distribution& dist) { return dist.latex(); }

}  // namespace dgm
