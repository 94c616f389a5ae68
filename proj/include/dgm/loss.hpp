// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dgm/distribution.hpp"

namespace dgm {

enum class LossKind {
  log_prob,
  expectation,
  kl_normal,
  entropy,
  adversarial_disc,
  adversarial_gen,
  constant,
  placeholder,
  add,
  sub,
  mul,
  div,
  neg,
  mean_batch,
  sum_batch,
};

/// Whether a node evaluates to one value per example or to a single value.
enum class Contract { batch, scalar };

enum class EntropyMethod { analytic, monte_carlo };

struct LossNode;

/// Immutable, shareable loss expression. Built symbolically, evaluated later
/// against data with `eval`.
class LossExpr {
 public:
  /// Constant node.
  LossExpr(double value);  // NOLINT(google-explicit-constructor)
  explicit LossExpr(std::shared_ptr<const LossNode> node);

  LossKind kind() const;
  Contract contract() const;
  const std::vector<LossExpr>& children() const;
  const LossNode& node() const { return *node_; }

  /// Free variables: names that must be supplied as data.
  std::set<std::string> input_vars() const;

  std::string text() const;
  std::string latex() const;

 private:
  std::shared_ptr<const LossNode> node_;
};

struct LossNode {
  LossKind kind;
  Contract contract;
  std::vector<LossExpr> children;
  DistPtr dist;    // log_prob, expectation, entropy, kl q, adversarial generator
  DistPtr other;   // kl p, adversarial discriminator
  std::string name;  // placeholder name, adversarial data variable
  double value = 0.0;  // constant value, placeholder default
  bool reparam = true;
  EntropyMethod method = EntropyMethod::analytic;
};

/// Per-example log p(values). Deterministic distributions are rejected.
LossExpr log_prob(DistPtr dist);
/// Monte-Carlo average of `inner` over draws of q; binds q's variables.
LossExpr expectation(DistPtr q, LossExpr inner, bool reparam = true);
/// Closed-form KL between diagonal Normals, per example.
LossExpr kl_normal(DistPtr q, DistPtr p);
LossExpr entropy(DistPtr dist, EntropyMethod method = EntropyMethod::analytic);
/// (generator loss, discriminator loss), both scalar. `disc` must be a
/// Bernoulli over one variable conditioned on `data_var`; D(x) is its
/// probability of 1.
std::pair<LossExpr, LossExpr> adversarial_pair(const std::string& data_var, DistPtr gen, DistPtr disc);
LossExpr constant(double value);
LossExpr placeholder(const std::string& name, double default_value);
LossExpr mean(const LossExpr& a);
LossExpr sum(const LossExpr& a);

LossExpr operator+(const LossExpr& a, const LossExpr& b);
LossExpr operator-(const LossExpr& a, const LossExpr& b);
LossExpr operator*(const LossExpr& a, const LossExpr& b);
LossExpr operator/(const LossExpr& a, const LossExpr& b);
LossExpr operator-(const LossExpr& a);

struct EvalContext {
  SampleMap data;
  Rng rng{0};
  std::map<std::string, double> placeholders;
  int mc_samples = 1;
  /// Batch size when no data variable is needed.
  Index batch_size = 1;
};

/// Evaluates against ctx.data, drawing from ctx.rng.
Tensor eval(const LossExpr& expr, EvalContext& ctx, bool record_gradients = false);
/// Same, inside an existing session (its stream replaces ctx.rng).
Tensor eval(const LossExpr& expr, const EvalContext& ctx, Session& session);

inline std::set<std::string> input_vars(const LossExpr& expr) { return expr.input_vars(); }
inline std::string format_text(const LossExpr& expr) { return expr.text(); }
inline std::string format_latex(const LossExpr& expr) { return expr.latex(); }

}  // namespace dgm
