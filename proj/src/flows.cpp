// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/flows.hpp"

#include <algorithm>
#include <cmath>

namespace dgm {

namespace {

/// Event-shaped parameter ([d] or size one) repeated over `batch` rows.
Tensor param_rows(const ParamRef& ref, Session& session, Index batch, Index dim, const std::string& what) {
  Tensor t = ref.get(session);
  t = reshape(t, {t.size()});
  if (t.size() == 1 && dim > 1) t = t * Tensor::ones({dim});
  if (t.size() != dim) {
    throw ShapeError(what + ": parameter of size " + std::to_string(t.size()) + " for input width " +
                     std::to_string(dim));
  }
  return broadcast_rows(t, batch);
}

Tensor require_matrix(const Tensor& t, const std::string& what) {
  if (t.rank() != 2) throw ShapeError(what + ": expected [batch, d] input, got " + shape_string(t.shape()));
  return t;
}

void append_name(std::vector<std::string>& names, const ParamRef& ref) {
  if (auto n = ref.parameter_name()) names.push_back(*n);
}

}  // namespace

// ---------------------------------------------------------------------------
// Affine

AffineFlow::AffineFlow(std::string name, ParamRef scale, ParamRef shift)
    : FlowLayer(std::move(name)), scale_(std::move(scale)), shift_(std::move(shift)) {
  if ((scale_.value().data() == 0.0).any()) throw DomainError("affine flow '" + this->name() + "': zero scale entry");
}

Tensor AffineFlow::scale_rows(Session& session, Index batch, Index dim) const {
  Tensor a = param_rows(scale_, session, batch, dim, "affine flow '" + name() + "'");
  if ((a.data() == 0.0).any()) throw DomainError("affine flow '" + name() + "': zero scale entry");
  return a;
}

Tensor AffineFlow::shift_rows(Session& session, Index batch, Index dim) const {
  return param_rows(shift_, session, batch, dim, "affine flow '" + name() + "'");
}

Tensor AffineFlow::forward(const Tensor& z, Session& session) const {
  require_matrix(z, name());
  const Index n = z.shape()[0], d = z.shape()[1];
  return scale_rows(session, n, d) * z + shift_rows(session, n, d);
}

Tensor AffineFlow::inverse(const Tensor& x, Session& session) const {
  require_matrix(x, name());
  const Index n = x.shape()[0], d = x.shape()[1];
  return (x - shift_rows(session, n, d)) / scale_rows(session, n, d);
}

Tensor AffineFlow::log_det(const Tensor& z, Session& session) const {
  require_matrix(z, name());
  return sum(log(abs(scale_rows(session, z.shape()[0], z.shape()[1]))), 1);
}

std::vector<std::string> AffineFlow::parameters() const {
  std::vector<std::string> names;
  append_name(names, scale_);
  append_name(names, shift_);
  return names;
}

// ---------------------------------------------------------------------------
// Planar

PlanarFlow::PlanarFlow(std::string name, ParamRef u, ParamRef w, ParamRef b)
    : FlowLayer(std::move(name)), u_(std::move(u)), w_(std::move(w)), b_(std::move(b)) {
  if (u_.value().size() != w_.value().size()) throw ShapeError("planar flow '" + this->name() + "': u and w differ in size");
  if (b_.value().size() != 1) throw ShapeError("planar flow '" + this->name() + "': b must be a single value");
}

PlanarFlow::Terms PlanarFlow::terms(Session& session) const {
  const Tensor u = reshape(u_.get(session), {u_.value().size()});
  const Tensor w = reshape(w_.get(session), {w_.value().size()});
  const Tensor b = reshape(b_.get(session), {});
  const Tensor ww = sum(w * w);
  if (ww.item() == 0.0) return {u, w, b};
  const Tensor wu = sum(w * u);
  const Tensor m = softplus(wu) - 1.0;
  return {u + ((m - wu) / ww) * w, w, b};
}

Tensor PlanarFlow::forward(const Tensor& z, Session& session) const {
  require_matrix(z, name());
  const Terms t = terms(session);
  const Index d = t.w.size();
  const Tensor pre = matmul(z, reshape(t.w, {d, 1})) + t.b;
  return z + matmul(tanh(pre), reshape(t.u_hat, {1, d}));
}

Tensor PlanarFlow::log_det(const Tensor& z, Session& session) const {
  require_matrix(z, name());
  const Terms t = terms(session);
  const Index d = t.w.size();
  const Tensor pre = matmul(z, reshape(t.w, {d, 1})) + t.b;
  const Tensor slope = 1.0 - square(tanh(pre));
  const Tensor det = 1.0 + slope * sum(t.w * t.u_hat);
  return reshape(log(det), {z.shape()[0]});
}

Tensor PlanarFlow::inverse(const Tensor& x, Session& session) const {
  require_matrix(x, name());
  const Terms t = terms(session);
  const Index n = x.shape()[0], d = t.w.size();
  const double s = sum(t.w * t.u_hat).item();
  const double b = t.b.item();

  // Solve alpha + s tanh(alpha + b) = y per row, y = x·w. The left side is
  // strictly increasing (s > -1) and |alpha - y| <= |s|.
  const Array y = (x.detach().matrix() * t.w.data().matrix()).array();
  Array alpha(n);
  for (Index i = 0; i < n; ++i) {
    double lo = y[i] - std::abs(s) - 1e-12, hi = y[i] + std::abs(s) + 1e-12;
    double a = y[i];
    for (int iter = 0; iter < 200; ++iter) {
      const double th = std::tanh(a + b);
      const double g = a + s * th - y[i];
      if (g > 0) hi = a; else lo = a;
      const double gp = 1.0 + s * (1.0 - th * th);
      double next = a - g / gp;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - a) <= 1e-15 * std::max(1.0, std::abs(a))) {
        a = next;
        break;
      }
      a = next;
    }
    alpha[i] = a;
  }

  // One Newton step on the tape: the value stays at the root, the derivative
  // w.r.t. x and the layer parameters is -(dg/dθ) / g'.
  const Tensor alpha0({n, 1}, alpha);
  const Array th0 = (alpha + b).tanh();
  const Tensor slope({n, 1}, 1.0 + s * (1.0 - th0.square()));
  const Tensor residual = alpha0 + sum(t.w * t.u_hat) * tanh(alpha0 + t.b) - matmul(x, reshape(t.w, {d, 1}));
  const Tensor solved = alpha0 - residual / slope;
  return x - matmul(tanh(solved + t.b), reshape(t.u_hat, {1, d}));
}

std::vector<std::string> PlanarFlow::parameters() const {
  std::vector<std::string> names;
  append_name(names, u_);
  append_name(names, w_);
  append_name(names, b_);
  return names;
}

// ---------------------------------------------------------------------------
// Flow distributions

FlowDistribution::FlowDistribution(DistSpec spec, DistPtr base, std::vector<FlowPtr> flows)
    : Distribution(std::move(spec)), base_(std::move(base)), flows_(std::move(flows)) {
  if (!base_) throw ConfigError("flow distribution: null base distribution");
  if (var().size() != 1 || base_->var().size() != 1) {
    throw ConfigError("flow distribution: base and output must each define one variable");
  }
  if (base_->var()[0] == var()[0]) throw ConfigError("flow distribution: base and output variable names must differ");
  for (const auto& c : base_->cond_var()) {
    if (std::find(cond_var().begin(), cond_var().end(), c) == cond_var().end()) {
      throw ConfigError("flow distribution: base conditions on '" + c + "' which the output spec does not");
    }
  }
  for (const auto& f : flows_) {
    if (!f) throw ConfigError("flow distribution: null flow layer");
  }
}

SampleMap FlowDistribution::sample(const SampleMap& input, Index batch_n, bool reparam, Session& session) const {
  const Index batch = resolve_batch(input, batch_n);
  const SampleMap cond = conditions(input);
  const SampleMap base_draw = base_->sample(cond, batch, reparam, session);
  Tensor x = flatten_batch(base_draw.at(base_->var()[0]));
  for (const auto& f : flows_) x = f->forward(x, session);
  SampleMap out = input;
  out.insert_or_assign(var()[0], x);
  return out;
}

Tensor FlowDistribution::log_prob(const SampleMap& values, Session& session) const {
  auto it = values.find(var()[0]);
  if (it == values.end()) throw MissingVariable({var()[0]});
  Tensor current = flatten_batch(it->second);
  std::vector<Tensor> log_dets;
  for (auto f = flows_.rbegin(); f != flows_.rend(); ++f) {
    current = (*f)->inverse(current, session);
    log_dets.push_back((*f)->log_det(current, session));
  }
  SampleMap base_values = conditions(values);
  base_values.insert_or_assign(base_->var()[0], current);
  Tensor lp = base_->log_prob(base_values, session);
  for (const auto& ld : log_dets) lp = lp - ld;
  return lp;
}

std::vector<std::string> FlowDistribution::parameters() const {
  std::vector<std::string> names = base_->parameters();
  for (const auto& f : flows_) {
    for (auto& n : f->parameters()) names.push_back(std::move(n));
  }
  return names;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const AffineFlow> affine_flow(std::string name, ParamRef scale, ParamRef shift) {
  return std::make_shared<const AffineFlow>(std::move(name), std::move(scale), std::move(shift));
}

std::shared_ptr<const PlanarFlow> planar_flow(std::string name, ParamRef u, ParamRef w, ParamRef b) {
  return std::make_shared<const PlanarFlow>(std::move(name), std::move(u), std::move(w), std::move(b));
}

namespace {

template <typename Fn>
Tensor without_tape(Fn&& fn) {
  Rng rng(0);
  Session session(rng, false);
  return fn(session);
}

}  // namespace

Tensor flow_forward(const FlowLayer& layer, const Tensor& input) {
  return without_tape([&](Session& s) { return layer.forward(input, s); });
}

Tensor flow_inverse(const FlowLayer& layer, const Tensor& input) {
  return without_tape([&](Session& s) { return layer.inverse(input, s); });
}

Tensor flow_log_det(const FlowLayer& layer, const Tensor& input) {
  return without_tape([&](Session& s) { return layer.log_det(input, s); });
}

}  // namespace dgm
