// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/loss.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "dgm/families.hpp"

namespace dgm {

namespace {

std::shared_ptr<LossNode> node(LossKind kind, Contract contract) {
  auto n = std::make_shared<LossNode>();
  n->kind = kind;
  n->contract = contract;
  return n;
}

void collect_placeholders(const LossExpr& e, std::map<std::string, const LossNode*>& seen) {
  const LossNode& n = e.node();
  if (n.kind == LossKind::placeholder) {
    auto [it, inserted] = seen.emplace(n.name, &n);
    if (!inserted && it->second != &n) throw ConfigError("placeholder '" + n.name + "' is defined twice");
  }
  for (const auto& c : n.children) collect_placeholders(c, seen);
}

LossExpr with_children(std::shared_ptr<LossNode> n, std::vector<LossExpr> children) {
  n->children = std::move(children);
  LossExpr out(std::move(n));
  std::map<std::string, const LossNode*> seen;
  collect_placeholders(out, seen);
  return out;
}

void require(const DistPtr& d, const std::string& what) {
  if (!d) throw ConfigError(what + ": null distribution");
}

void insert_all(std::set<std::string>& out, const std::vector<std::string>& names) {
  out.insert(names.begin(), names.end());
}

LossExpr binary(LossKind kind, const LossExpr& a, const LossExpr& b) {
  const Contract c =
      a.contract() == Contract::batch || b.contract() == Contract::batch ? Contract::batch : Contract::scalar;
  return with_children(node(kind, c), {a, b});
}

LossExpr reduction(LossKind kind, const LossExpr& a, const char* what) {
  if (a.contract() != Contract::batch) throw ConfigError(std::string(what) + "() expects a per-example expression");
  return with_children(node(kind, Contract::scalar), {a});
}

// ---------------------------------------------------------------------------
// Formatting

std::string number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool compound(const LossNode& n) {
  switch (n.kind) {
    case LossKind::add:
    case LossKind::sub:
    case LossKind::mul:
    case LossKind::div:
    case LossKind::neg:
      return true;
    case LossKind::constant:
      return n.value < 0 || std::signbit(n.value);
    default:
      return false;
  }
}

std::string render(const LossNode& n, bool tex);

std::string operand(const LossExpr& e, bool tex) {
  const std::string r = render(e.node(), tex);
  if (!compound(e.node())) return r;
  return tex ? "\\left(" + r + "\\right)" : "(" + r + ")";
}

std::string render(const LossNode& n, bool tex) {
  const auto& ch = n.children;
  switch (n.kind) {
    case LossKind::log_prob:
      return (tex ? "\\log " : "log ") + n.dist->spec().atom();
    case LossKind::expectation:
      if (tex) return "\\mathbb{E}_{" + n.dist->spec().atom() + "}\\left[" + render(ch[0].node(), tex) + "\\right]";
      return "E_{" + n.dist->spec().atom() + "}[" + render(ch[0].node(), tex) + "]";
    case LossKind::kl_normal:
      if (tex) return "D_{KL}\\left[" + n.dist->spec().atom() + "||" + n.other->spec().atom() + "\\right]";
      return "D_KL[" + n.dist->spec().atom() + "||" + n.other->spec().atom() + "]";
    case LossKind::entropy:
      return tex ? "H\\left[" + n.dist->spec().atom() + "\\right]" : "H[" + n.dist->spec().atom() + "]";
    case LossKind::adversarial_disc:
    case LossKind::adversarial_gen: {
      const std::string role = n.kind == LossKind::adversarial_disc ? "D" : "G";
      const std::string args = n.other->spec().atom() + "," + n.dist->spec().atom();
      return tex ? "\\mathcal{L}_{" + role + "}\\left[" + args + "\\right]" : "L_" + role + "[" + args + "]";
    }
    case LossKind::constant:
      return number(n.value);
    case LossKind::placeholder:
      return n.name;
    case LossKind::add:
      return operand(ch[0], tex) + " + " + operand(ch[1], tex);
    case LossKind::sub:
      return operand(ch[0], tex) + " - " + operand(ch[1], tex);
    case LossKind::mul:
      return operand(ch[0], tex) + (tex ? " \\cdot " : " * ") + operand(ch[1], tex);
    case LossKind::div:
      if (tex) return "\\frac{" + render(ch[0].node(), tex) + "}{" + render(ch[1].node(), tex) + "}";
      return operand(ch[0], tex) + " / " + operand(ch[1], tex);
    case LossKind::neg:
      return "-" + operand(ch[0], tex);
    case LossKind::mean_batch:
      return tex ? "\\mathrm{mean}\\left(" + render(ch[0].node(), tex) + "\\right)"
                 : "mean(" + render(ch[0].node(), tex) + ")";
    case LossKind::sum_batch:
      return tex ? "\\mathrm{sum}\\left(" + render(ch[0].node(), tex) + "\\right)"
                 : "sum(" + render(ch[0].node(), tex) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Evaluation

SampleMap pick(const SampleMap& env, const std::vector<std::string>& names) {
  SampleMap out;
  for (const auto& n : names) {
    auto it = env.find(n);
    if (it != env.end()) out.emplace(n, it->second);
  }
  return out;
}

/// Σ_d ½(σq²/σp² + (μq−μp)²/σp² − 1) − log σq + log σp, one tape node.
Tensor normal_kl(const Tensor& mq, const Tensor& sq, const Tensor& mp, const Tensor& sp) {
  const Index n = mq.shape()[0], d = mq.shape()[1];
  auto M = [&](const Tensor& t) { return t.matrix().array(); };
  const auto diff = (M(mq) - M(mp)).eval();
  const auto inv_p = M(sp).inverse().eval();
  const auto terms = (0.5 * ((M(sq) * inv_p).square() + (diff * inv_p).square() - 1.0) - M(sq).log() + M(sp).log()).eval();
  Array value = terms.rowwise().sum();
  if (!value.allFinite()) throw NonFiniteError("kl_normal: result contains non-finite values");
  std::shared_ptr<Tape> tape;
  for (const Tensor* t : {&mq, &sq, &mp, &sp}) {
    if (t->requires_grad()) tape = t->tape();
  }
  if (!tape) return Tensor({n}, std::move(value));
  auto b_diff = std::make_shared<const RowMatrix>(diff.matrix());
  auto b_sqv = sq.buffer(), b_sp = sp.buffer();
  Tape::Backward fn = [n, d, b_diff, b_sqv, b_sp](const Array& g, const std::vector<Array*>& slots) {
    using Map = Eigen::Map<const RowMatrix>;
    const auto diff = b_diff->array();
    const auto s_q = Map(b_sqv->data(), n, d).array();
    const auto s_p = Map(b_sp->data(), n, d).array();
    const auto gcol = Eigen::Map<const Eigen::ArrayXd>(g.data(), n).replicate(1, d);
    auto add = [&](std::size_t k, const auto& expr) {
      if (!slots[k]) return;
      Eigen::Map<RowMatrix>(slots[k]->data(), n, d).array() += gcol * expr;
    };
    const auto inv_p2 = s_p.square().inverse();
    add(0, diff * inv_p2);
    add(1, s_q * inv_p2 - s_q.inverse());
    add(2, -diff * inv_p2);
    add(3, s_p.inverse() - (s_q.square() + diff.square()) * inv_p2 / s_p);
  };
  return tape->record({n}, std::move(value), {&mq, &sq, &mp, &sp}, std::move(fn));
}

const Normal& as_normal(const DistPtr& d) { return dynamic_cast<const Normal&>(*d); }
const Bernoulli& as_bernoulli(const DistPtr& d) { return dynamic_cast<const Bernoulli&>(*d); }

struct Evaluator {
  const EvalContext& ctx;
  Session& session;

  Tensor run(const LossNode& n, const SampleMap& env, Index batch);

  /// Average over mc draws of `per_draw`, which returns one value per row of the draw.
  template <typename Fn>
  Tensor monte_carlo(const Distribution& q, const SampleMap& env, Index batch, bool reparam, Fn&& per_draw) {
    SampleMap base = env;
    for (const auto& v : q.var()) base.erase(v);
    const Index n = ctx.mc_samples;
    if (n > 1) {
      for (auto& [name, t] : base) t = tile_rows(t, n);
    }
    const SampleMap drawn = q.sample(base, batch * n, reparam && session.recording(), session);
    Tensor v = per_draw(drawn, batch * n);
    if (n == 1) return v;
    return mean(reshape(v, {n, batch}), 0);
  }

  Tensor expectation(const LossNode& n, const SampleMap& env, Index batch) {
    const LossNode& inner = n.children[0].node();
    if (inner.contract == Contract::batch) {
      return monte_carlo(*n.dist, env, batch, n.reparam,
                         [&](const SampleMap& drawn, Index rows) { return run(inner, drawn, rows); });
    }
    SampleMap base = env;
    for (const auto& v : n.dist->var()) base.erase(v);
    Tensor acc;
    for (int k = 0; k < ctx.mc_samples; ++k) {
      const SampleMap drawn = n.dist->sample(base, batch, n.reparam && session.recording(), session);
      Tensor v = run(inner, drawn, batch);
      acc = k == 0 ? v : acc + v;
    }
    return ctx.mc_samples == 1 ? acc : acc / static_cast<double>(ctx.mc_samples);
  }

  Tensor kl(const LossNode& n, const SampleMap& env, Index batch) {
    const Normal::Params q = as_normal(n.dist).params(env, batch, session);
    const Normal::Params p = as_normal(n.other).params(env, batch, session);
    if (q.loc.shape() != p.loc.shape()) {
      throw ShapeError("kl_normal: event shapes differ, " + shape_string(q.loc.shape()) + " vs " +
                       shape_string(p.loc.shape()));
    }
    return normal_kl(q.loc, q.scale, p.loc, p.scale);
  }

  Tensor entropy(const LossNode& n, const SampleMap& env, Index batch) {
    if (n.method == EntropyMethod::analytic) {
      const Normal::Params p = as_normal(n.dist).params(env, batch, session);
      const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
      return sum(log(p.scale) + c, 1);
    }
    return -monte_carlo(*n.dist, env, batch, true, [&](const SampleMap& drawn, Index) {
      return n.dist->log_prob(drawn, session);
    });
  }

  Tensor draw_generated(const LossNode& n, const SampleMap& env, Index batch, bool reparam) {
    const SampleMap drawn = n.dist->sample(pick(env, n.dist->cond_var()), batch, reparam, session);
    return drawn.at(n.name);
  }

  Tensor disc_logits(const LossNode& n, const SampleMap& env, const Tensor& x, Index batch) {
    SampleMap in = pick(env, n.other->cond_var());
    in.insert_or_assign(n.name, x);
    return as_bernoulli(n.other).logits(in, batch, session);
  }

  Tensor adversarial_disc(const LossNode& n, const SampleMap& env, Index batch) {
    auto it = env.find(n.name);
    if (it == env.end()) throw MissingVariable({n.name});
    // log D(x) = -softplus(-l), log(1 - D(x)) = -softplus(l).
    const Tensor real = disc_logits(n, env, it->second, batch);
    const Tensor real_term = mean(sum(softplus(-real), 1));
    Tensor fake;
    {
      Session::FreezeGuard guard(session, n.dist->parameters());
      fake = draw_generated(n, env, batch, false).detach();
    }
    const Tensor fake_logits = disc_logits(n, env, fake, batch);
    return real_term + mean(sum(softplus(fake_logits), 1));
  }

  Tensor adversarial_gen(const LossNode& n, const SampleMap& env, Index batch) {
    Session::FreezeGuard guard(session, n.other->parameters());
    const Tensor fake = draw_generated(n, env, batch, session.recording());
    return mean(sum(softplus(-disc_logits(n, env, fake, batch)), 1));
  }

  double placeholder(const LossNode& n) const {
    auto it = ctx.placeholders.find(n.name);
    return it == ctx.placeholders.end() ? n.value : it->second;
  }
};

Tensor Evaluator::run(const LossNode& n, const SampleMap& env, Index batch) {
  const auto& ch = n.children;
  switch (n.kind) {
    case LossKind::log_prob:
      return n.dist->log_prob(env, session);
    case LossKind::expectation:
      return expectation(n, env, batch);
    case LossKind::kl_normal:
      return kl(n, env, batch);
    case LossKind::entropy:
      return entropy(n, env, batch);
    case LossKind::adversarial_disc:
      return adversarial_disc(n, env, batch);
    case LossKind::adversarial_gen:
      return adversarial_gen(n, env, batch);
    case LossKind::constant:
      return Tensor::scalar(n.value);
    case LossKind::placeholder:
      return Tensor::scalar(placeholder(n));
    case LossKind::neg:
      return -run(ch[0].node(), env, batch);
    case LossKind::mean_batch:
      return mean(run(ch[0].node(), env, batch));
    case LossKind::sum_batch:
      return sum(run(ch[0].node(), env, batch));
    default:
      break;
  }
  const Tensor a = run(ch[0].node(), env, batch);
  const Tensor b = run(ch[1].node(), env, batch);
  switch (n.kind) {
    case LossKind::add:
      return a + b;
    case LossKind::sub:
      return a - b;
    case LossKind::mul:
      return a * b;
    default:
      return a / b;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

LossExpr::LossExpr(double value) : LossExpr(constant(value)) {}

LossExpr::LossExpr(std::shared_ptr<const LossNode> node) : node_(std::move(node)) {
  if (!node_) throw ConfigError("loss: null node");
}

LossKind LossExpr::kind() const { return node_->kind; }
Contract LossExpr::contract() const { return node_->contract; }
const std::vector<LossExpr>& LossExpr::children() const { return node_->children; }

std::set<std::string> LossExpr::input_vars() const {
  const LossNode& n = *node_;
  std::set<std::string> out;
  switch (n.kind) {
    case LossKind::log_prob:
      insert_all(out, n.dist->var());
      insert_all(out, n.dist->cond_var());
      break;
    case LossKind::expectation:
      out = n.children[0].input_vars();
      insert_all(out, n.dist->cond_var());
      for (const auto& v : n.dist->var()) out.erase(v);
      break;
    case LossKind::kl_normal:
      insert_all(out, n.dist->cond_var());
      insert_all(out, n.other->cond_var());
      break;
    case LossKind::entropy:
      insert_all(out, n.dist->cond_var());
      break;
    case LossKind::adversarial_disc:
      insert_all(out, n.other->cond_var());
      insert_all(out, n.dist->cond_var());
      break;
    case LossKind::adversarial_gen:
      insert_all(out, n.other->cond_var());
      out.erase(n.name);
      insert_all(out, n.dist->cond_var());
      break;
    default:
      for (const auto& c : n.children) {
        auto sub = c.input_vars();
        out.insert(sub.begin(), sub.end());
      }
  }
  return out;
}

std::string LossExpr::text() const { return render(*node_, false); }
std::string LossExpr::latex() const { return render(*node_, true); }

LossExpr log_prob(DistPtr dist) {
  require(dist, "log_prob");
  if (std::dynamic_pointer_cast<const Deterministic>(dist)) {
    throw UnsupportedOperation("log_prob: " + dist->spec().atom() + " is deterministic and has no density");
  }
  auto n = node(LossKind::log_prob, Contract::batch);
  n->dist = std::move(dist);
  return LossExpr(std::move(n));
}

LossExpr expectation(DistPtr q, LossExpr inner, bool reparam) {
  require(q, "expectation");
  auto n = node(LossKind::expectation, inner.contract());
  n->dist = std::move(q);
  n->reparam = reparam;
  return with_children(std::move(n), {std::move(inner)});
}

LossExpr kl_normal(DistPtr q, DistPtr p) {
  require(q, "kl_normal");
  require(p, "kl_normal");
  if (!std::dynamic_pointer_cast<const Normal>(q) || !std::dynamic_pointer_cast<const Normal>(p)) {
    throw UnsupportedOperation("kl_normal: closed form needs two Normal distributions, got " + q->spec().atom() +
                               " and " + p->spec().atom() + "; use expectation(q, log_prob(q) - log_prob(p))");
  }
  auto n = node(LossKind::kl_normal, Contract::batch);
  n->dist = std::move(q);
  n->other = std::move(p);
  return LossExpr(std::move(n));
}

LossExpr entropy(DistPtr dist, EntropyMethod method) {
  require(dist, "entropy");
  if (std::dynamic_pointer_cast<const Deterministic>(dist)) {
    throw UnsupportedOperation("entropy: " + dist->spec().atom() + " is deterministic and has no density");
  }
  if (method == EntropyMethod::analytic && !std::dynamic_pointer_cast<const Normal>(dist)) {
    throw UnsupportedOperation("entropy: closed form needs a Normal, got " + dist->spec().atom() +
                               "; use EntropyMethod::monte_carlo");
  }
  auto n = node(LossKind::entropy, Contract::batch);
  n->dist = std::move(dist);
  n->method = method;
  return LossExpr(std::move(n));
}

std::pair<LossExpr, LossExpr> adversarial_pair(const std::string& data_var, DistPtr gen, DistPtr disc) {
  require(gen, "adversarial_pair");
  require(disc, "adversarial_pair");
  const auto& gv = gen->var();
  if (std::find(gv.begin(), gv.end(), data_var) == gv.end()) {
    throw ConfigError("adversarial_pair: generator " + gen->spec().atom() + " does not define '" + data_var + "'");
  }
  if (!std::dynamic_pointer_cast<const Bernoulli>(disc)) {
    throw ConfigError("adversarial_pair: discriminator " + disc->spec().atom() + " must be a Bernoulli");
  }
  const auto& dc = disc->cond_var();
  if (std::find(dc.begin(), dc.end(), data_var) == dc.end()) {
    throw ConfigError("adversarial_pair: discriminator " + disc->spec().atom() + " does not condition on '" +
                      data_var + "'");
  }
  auto make = [&](LossKind kind) {
    auto n = node(kind, Contract::scalar);
    n->dist = gen;
    n->other = disc;
    n->name = data_var;
    return LossExpr(std::move(n));
  };
  return {make(LossKind::adversarial_gen), make(LossKind::adversarial_disc)};
}

LossExpr constant(double value) {
  if (!std::isfinite(value)) throw ConfigError("constant: value must be finite");
  auto n = node(LossKind::constant, Contract::scalar);
  n->value = value;
  return LossExpr(std::move(n));
}

LossExpr placeholder(const std::string& name, double default_value) {
  validate_var_name(name);
  auto n = node(LossKind::placeholder, Contract::scalar);
  n->name = name;
  n->value = default_value;
  return LossExpr(std::move(n));
}

LossExpr mean(const LossExpr& a) { return reduction(LossKind::mean_batch, a, "mean"); }
LossExpr sum(const LossExpr& a) { return reduction(LossKind::sum_batch, a, "sum"); }

LossExpr operator+(const LossExpr& a, const LossExpr& b) { return binary(LossKind::add, a, b); }
LossExpr operator-(const LossExpr& a, const LossExpr& b) { return binary(LossKind::sub, a, b); }
LossExpr operator*(const LossExpr& a, const LossExpr& b) { return binary(LossKind::mul, a, b); }
LossExpr operator/(const LossExpr& a, const LossExpr& b) { return binary(LossKind::div, a, b); }
LossExpr operator-(const LossExpr& a) { return with_children(node(LossKind::neg, a.contract()), {a}); }

Tensor eval(const LossExpr& expr, EvalContext& ctx, bool record_gradients) {
  Session session(ctx.rng, record_gradients);
  return eval(expr, ctx, session);
}

Tensor eval(const LossExpr& expr, const EvalContext& ctx, Session& session) {
  if (ctx.mc_samples < 1) throw ConfigError("eval: mc_samples must be at least 1");
  SampleMap data;
  std::vector<std::string> missing;
  for (const auto& v : expr.input_vars()) {
    auto it = ctx.data.find(v);
    if (it == ctx.data.end()) {
      missing.push_back(v);
    } else {
      data.emplace(v, it->second);
    }
  }
  if (!missing.empty()) throw MissingVariable(missing);
  const Index batch = data.empty() ? ctx.batch_size : batch_size(data);
  if (batch < 1) throw ConfigError("eval: batch size must be positive");
  Evaluator ev{ctx, session};
  return ev.run(expr.node(), data, batch);
}

}  // namespace dgm
