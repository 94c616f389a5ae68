// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/families.hpp"

#include <cmath>
#include <numbers>

namespace dgm {

namespace {

constexpr double kScaleFloor = 1e-12;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

void require_single_var(const DistSpec& spec, const char* family) {
  if (spec.var.size() != 1) throw ConfigError(std::string(family) + " defines exactly one variable");
}

void require_roles(const TensorMap& out, const std::vector<std::string>& roles, const char* family) {
  bool ok = out.size() == roles.size();
  for (const auto& r : roles) ok = ok && out.count(r);
  if (!ok) {
    std::string expected;
    for (const auto& r : roles) expected += " " + r;
    throw ConfigError(std::string(family) + " network must return exactly the roles:" + expected);
  }
}

Tensor batch_rows(const Tensor& t, Index batch, const std::string& what) {
  Tensor m = flatten_batch(t);
  if (m.shape()[0] != batch) {
    throw ShapeError(what + ": network output has " + std::to_string(m.shape()[0]) + " rows, expected " +
                     std::to_string(batch));
  }
  return m;
}

/// Fixed event-shaped tensor repeated over the batch.
Tensor expand_event(const Tensor& event, Index dim, Index batch) {
  Tensor row = reshape(event, {event.size()});
  if (row.size() == 1 && dim > 1) row = row * Tensor::ones({dim});
  return broadcast_rows(row, batch);
}

/// Network outputs of size one broadcast to the companion role's shape.
Tensor match_shape(const Tensor& t, const Shape& shape) {
  if (t.shape() == shape) return t;
  if (t.size() == 1) return Tensor::ones(shape) * reshape(t, {});
  throw ShapeError("parameter roles have different shapes: " + shape_string(t.shape()) + " vs " +
                   shape_string(shape));
}

Tensor cached_or(Session& session, const void* owner, const SampleMap& cond,
                 const std::function<TensorMap()>& compute, const std::string& role, TensorMap* all = nullptr) {
  Session::CacheKey key{owner, Session::identity(cond), session.generation()};
  if (const TensorMap* hit = session.cached(key)) {
    if (all) *all = *hit;
    return hit->at(role);
  }
  TensorMap out = compute();
  session.store(std::move(key), cond, out);
  if (all) *all = out;
  return out.at(role);
}

}  // namespace

// ---------------------------------------------------------------------------
// Normal

Normal::Normal(DistSpec spec, ParamRef loc, ParamRef scale)
    : Distribution(std::move(spec)), loc_(std::move(loc)), scale_(std::move(scale)) {
  require_single_var(this->spec(), "Normal");
  const Tensor l = loc_.value();
  const Tensor s = scale_.value();
  if (l.size() != s.size() && l.size() != 1 && s.size() != 1) {
    throw ShapeError("Normal: loc and scale sizes differ");
  }
  if (!scale_.parameter_name()) {
    if ((s.data() <= 0.0).any()) throw ConfigError("Normal: scale must be positive");
    if ((s.data() < kScaleFloor).any()) {
      warn("Normal " + this->spec().atom() + ": scale below 1e-12 raised to 1e-12");
      scale_ = ParamRef(Tensor(s.shape(), s.data().max(kScaleFloor)));
    }
  }
}

Normal::Normal(DistSpec spec, ParamNetwork network, Link link)
    : Distribution(std::move(spec)), network_(std::move(network)), link_(link), networked_(true) {
  require_single_var(this->spec(), "Normal");
  if (!network_.fn) throw ConfigError("Normal: empty parameter network");
}

Normal::Params Normal::params(const SampleMap& input, Index batch, Session& session) const {
  if (!networked_) {
    const Tensor loc = loc_.get(session);
    const Tensor scale = scale_.get(session);
    const Index dim = std::max(loc.size(), scale.size());
    Params p{expand_event(loc, dim, batch), expand_event(scale, dim, batch)};
    if ((p.scale.data() <= 0.0).any()) throw DomainError("Normal: scale must be positive");
    return p;
  }
  const SampleMap cond = conditions(input);
  TensorMap all;
  cached_or(
      session, this, cond,
      [&] {
        TensorMap out = network_.fn(cond, session);
        require_roles(out, {"loc", "scale"}, "Normal");
        Tensor loc = batch_rows(out.at("loc"), batch, spec().atom());
        Tensor raw = out.at("scale").size() == 1 ? out.at("scale") : batch_rows(out.at("scale"), batch, spec().atom());
        if (loc.size() == 1 && raw.size() > 1) loc = match_shape(loc, raw.shape());
        raw = match_shape(raw, loc.shape());
        Tensor scale;
        if (link_ == Link::constrained) {
          scale = softplus(raw) + kScaleFloor;
        } else {
          if ((raw.data() <= 0.0).any()) throw DomainError("Normal: network scale must be positive");
          scale = raw;
        }
        return TensorMap{{"loc", loc}, {"scale", scale}};
      },
      "loc", &all);
  return {all.at("loc"), all.at("scale")};
}

SampleMap Normal::sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const {
  const Index batch = resolve_batch(input, batch_n);
  const Params p = params(input, batch, session);
  const Tensor eps = standard_normal(p.loc.shape(), session.rng());
  SampleMap out = input;
  out.insert_or_assign(var()[0], reparam ? p.loc + p.scale * eps : p.loc.detach() + p.scale.detach() * eps);
  return out;
}

Tensor Normal::log_prob(const SampleMap& values, Session& session) const {
  auto it = values.find(var()[0]);
  if (it == values.end()) throw MissingVariable({var()[0]});
  const Index batch = it->second.rank() > 0 ? it->second.shape()[0] : 1;
  const Tensor x = event_matrix(values, var()[0], batch);
  const Params p = params(values, batch, session);
  if (x.shape() != p.loc.shape()) {
    throw ShapeError("Normal " + spec().atom() + ": value shape " + shape_string(x.shape()) +
                     " does not match parameters " + shape_string(p.loc.shape()));
  }
  const Tensor z = (x - p.loc) / p.scale;
  return sum(-0.5 * square(z) - log(p.scale) - kHalfLog2Pi, 1);
}

std::vector<std::string> Normal::parameters() const {
  if (networked_) return network_.parameters;
  std::vector<std::string> names;
  if (auto n = loc_.parameter_name()) names.push_back(*n);
  if (auto n = scale_.parameter_name()) names.push_back(*n);
  return names;
}

// ---------------------------------------------------------------------------
// Bernoulli

Bernoulli::Bernoulli(DistSpec spec, ParamRef probs) : Distribution(std::move(spec)), probs_(std::move(probs)) {
  require_single_var(this->spec(), "Bernoulli");
  const Tensor p = probs_.value();
  if (!((p.data() > 0.0).all() && (p.data() < 1.0).all())) {
    throw ConfigError("Bernoulli: probs must lie strictly inside (0, 1)");
  }
}

Bernoulli::Bernoulli(DistSpec spec, ParamNetwork network, Link link)
    : Distribution(std::move(spec)), network_(std::move(network)), link_(link), networked_(true) {
  require_single_var(this->spec(), "Bernoulli");
  if (!network_.fn) throw ConfigError("Bernoulli: empty parameter network");
}

Tensor Bernoulli::logits(const SampleMap& input, Index batch, Session& session) const {
  if (!networked_) {
    const Tensor p = probs_.get(session);
    return expand_event(log(p) - log(1.0 - p), p.size(), batch);
  }
  const SampleMap cond = conditions(input);
  return cached_or(
      session, this, cond,
      [&] {
        TensorMap out = network_.fn(cond, session);
        require_roles(out, {"probs"}, "Bernoulli");
        Tensor raw = batch_rows(out.at("probs"), batch, spec().atom());
        if (link_ == Link::none) {
          if (!((raw.data() > 0.0).all() && (raw.data() < 1.0).all())) {
            throw DomainError("Bernoulli: network probs must lie strictly inside (0, 1)");
          }
          raw = log(raw) - log(1.0 - raw);
        }
        return TensorMap{{"logits", raw}};
      },
      "logits");
}

SampleMap Bernoulli::sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const {
  if (reparam && session.recording()) {
    throw UnsupportedOperation("Bernoulli " + spec().atom() + " has no reparameterized sampler");
  }
  const Index batch = resolve_batch(input, batch_n);
  const Tensor l = logits(input, batch, session);
  const Array probs = sigmoid(l.detach()).data();
  Array draws(probs.size());
  for (Index i = 0; i < probs.size(); ++i) draws[i] = session.rng().uniform01() <= probs[i] ? 1.0 : 0.0;
  SampleMap out = input;
  out.insert_or_assign(var()[0], Tensor(l.shape(), std::move(draws)));
  return out;
}

Tensor Bernoulli::log_prob(const SampleMap& values, Session& session) const {
  auto it = values.find(var()[0]);
  if (it == values.end()) throw MissingVariable({var()[0]});
  const Index batch = it->second.rank() > 0 ? it->second.shape()[0] : 1;
  const Tensor x = event_matrix(values, var()[0], batch);
  if (!((x.data() >= 0.0).all() && (x.data() <= 1.0).all())) {
    throw DomainError("Bernoulli " + spec().atom() + ": values must lie in [0, 1]");
  }
  const Tensor l = logits(values, batch, session);
  if (x.shape() != l.shape()) {
    throw ShapeError("Bernoulli " + spec().atom() + ": value shape " + shape_string(x.shape()) +
                     " does not match parameters " + shape_string(l.shape()));
  }
  // x log σ(l) + (1 − x) log(1 − σ(l)) = x l − softplus(l)
  return sum(x * l - softplus(l), 1);
}

std::vector<std::string> Bernoulli::parameters() const {
  if (networked_) return network_.parameters;
  if (auto n = probs_.parameter_name()) return {*n};
  return {};
}

// ---------------------------------------------------------------------------
// Deterministic

Deterministic::Deterministic(DistSpec spec, ParamNetwork mapping)
    : Distribution(std::move(spec)), mapping_(std::move(mapping)) {
  if (!mapping_.fn) throw ConfigError("Deterministic: empty mapping");
}

SampleMap Deterministic::sample(const SampleMap& input, Index batch_n, bool, Session& session) const {
  const Index batch = resolve_batch(input, batch_n);
  TensorMap produced = mapping_.fn(conditions(input), session);
  require_roles(produced, var(), "Deterministic");
  SampleMap out = input;
  for (auto& [name, t] : produced) {
    if (t.rank() == 0 || t.shape()[0] != batch) {
      throw ShapeError("Deterministic " + spec().atom() + ": output '" + name + "' does not have " +
                       std::to_string(batch) + " rows");
    }
    out.insert_or_assign(name, t);
  }
  return out;
}

Tensor Deterministic::log_prob(const SampleMap&, Session&) const {
  throw UnsupportedOperation("Deterministic " + spec().atom() + " has no density");
}

// ---------------------------------------------------------------------------

std::shared_ptr<const Normal> make_normal(DistSpec spec, ParamRef loc, ParamRef scale) {
  return std::make_shared<const Normal>(std::move(spec), std::move(loc), std::move(scale));
}

std::shared_ptr<const Normal> make_normal(DistSpec spec, ParamNetwork network, Link link) {
  return std::make_shared<const Normal>(std::move(spec), std::move(network), link);
}

std::shared_ptr<const Bernoulli> make_bernoulli(DistSpec spec, ParamRef probs) {
  return std::make_shared<const Bernoulli>(std::move(spec), std::move(probs));
}

std::shared_ptr<const Bernoulli> make_bernoulli(DistSpec spec, ParamNetwork network, Link link) {
  return std::make_shared<const Bernoulli>(std::move(spec), std::move(network), link);
}

std::shared_ptr<const Deterministic> make_deterministic(DistSpec spec, ParamNetwork mapping) {
  return std::make_shared<const Deterministic>(std::move(spec), std::move(mapping));
}

std::shared_ptr<const Normal> standard_normal_prior(const std::string& var, Index dim, std::string symbol) {
  return make_normal(DistSpec(std::move(symbol), {var}), Tensor::zeros({dim}), Tensor::ones({dim}));
}

}  // namespace dgm
