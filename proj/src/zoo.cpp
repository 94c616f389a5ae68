// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/zoo.hpp"

#include "dgm/model.hpp"

namespace dgm {

namespace {

ParamNetwork normal_head(std::shared_ptr<const Mlp> net, const std::string& input, Index out) {
  return ParamNetwork{[net, input, out](const SampleMap& cond, Session& s) {
                        const Tensor h = net->forward(flatten_batch(cond.at(input)), s);
                        return TensorMap{{"loc", slice_cols(h, 0, out)}, {"scale", slice_cols(h, out, out)}};
                      },
                      net->parameters()};
}

ParamNetwork bernoulli_head(std::shared_ptr<const Mlp> net, const std::string& input) {
  return ParamNetwork{[net, input](const SampleMap& cond, Session& s) {
                        return TensorMap{{"probs", net->forward(flatten_batch(cond.at(input)), s)}};
                      },
                      net->parameters()};
}

}  // namespace

Vae build_vae(const VaeConfig& cfg) {
  Vae v;
  v.store = std::make_shared<ParameterStore>();
  Rng init(cfg.seed);
  auto enc = std::make_shared<const Mlp>(v.store, "enc", std::vector<Index>{cfg.x_dim, cfg.h_dim, 2 * cfg.z_dim},
                                         cfg.hidden, init);
  auto dec = std::make_shared<const Mlp>(v.store, "dec", std::vector<Index>{cfg.z_dim, cfg.h_dim, cfg.x_dim},
                                         cfg.hidden, init);
  v.q = make_normal(DistSpec("q", {"z"}, {"x"}), normal_head(enc, "x", cfg.z_dim));
  v.p = make_bernoulli(DistSpec("p", {"x"}, {"z"}), bernoulli_head(dec, "z"));
  v.prior = standard_normal_prior("z", cfg.z_dim);
  v.joint = product({v.p, v.prior});
  return v;
}

Gan build_gan(const GanConfig& cfg) {
  Gan g;
  g.store = std::make_shared<ParameterStore>();
  g.store->add("gen.scale", Tensor({1}, {cfg.gen_scale}));
  g.store->add("gen.shift", Tensor({1}, {cfg.gen_shift}));
  auto flow = affine_flow("gen", ParamRef(g.store, "gen.scale"), ParamRef(g.store, "gen.shift"));
  g.generator = std::make_shared<const TransformedDist>(DistSpec("p", {"x"}), standard_normal_prior("z", 1),
                                                        std::vector<FlowPtr>{flow});
  Rng init(cfg.seed);
  auto net = std::make_shared<const Mlp>(g.store, "disc", std::vector<Index>{1, cfg.disc_hidden, 1},
                                         Activation::tanh, init);
  g.discriminator = make_bernoulli(DistSpec("d", {"t"}, {"x"}), bernoulli_head(net, "x"));
  return g;
}

FlowModel build_flow(std::uint64_t seed) {
  FlowModel f;
  f.store = std::make_shared<ParameterStore>();
  Rng init(seed);
  f.store->add("flow.scale", Tensor({1}, {1.0}));
  f.store->add("flow.shift", Tensor({1}, {0.0}));
  f.store->add("flow.u", Tensor({1}, {0.1 * init.standard_normal()}));
  f.store->add("flow.w", Tensor({1}, {1.0 + 0.1 * init.standard_normal()}));
  f.store->add("flow.b", Tensor({1}, {0.0}));
  auto affine = affine_flow("affine", ParamRef(f.store, "flow.scale"), ParamRef(f.store, "flow.shift"));
  auto planar = planar_flow("planar", ParamRef(f.store, "flow.u"), ParamRef(f.store, "flow.w"),
                            ParamRef(f.store, "flow.b"));
  f.dist = std::make_shared<const TransformedDist>(DistSpec("p", {"x"}), standard_normal_prior("z", 1),
                                                   std::vector<FlowPtr>{affine, planar});
  return f;
}

Composite build_composite(const VaeConfig& cfg) {
  Composite c;
  c.vae = build_vae(cfg);
  Rng init(cfg.seed + 1);
  auto cls = std::make_shared<const Mlp>(c.vae.store, "cls", std::vector<Index>{cfg.x_dim, cfg.h_dim, 1}, cfg.hidden,
                                         init);
  c.classifier = make_bernoulli(DistSpec("q", {"y"}, {"x"}), bernoulli_head(cls, "x"));
  const LossExpr supervised = mean(-log_prob(c.classifier));
  const LossExpr elbo = vae_loss(c.vae.q, c.vae.p, c.vae.prior, KlMode::analytical);
  const LossExpr reg = placeholder("beta", 1.0) * mean(kl_normal(c.vae.q, c.vae.prior));
  c.loss = supervised + elbo + reg;
  return c;
}

}  // namespace dgm
