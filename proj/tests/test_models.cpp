// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dgm/model.hpp"
#include "dgm/zoo.hpp"

using namespace dgm;

namespace {

/// -log N(0; mu, 1/sqrt(2)) = mu^2 + const.
struct Quadratic {
  std::shared_ptr<ParameterStore> store = std::make_shared<ParameterStore>();
  std::shared_ptr<const Normal> dist;
  Quadratic() {
    store->add("mu", Tensor({1}, {1.0}));
    dist = make_normal(DistSpec("p", {"x"}), ParamRef(store, "mu"), Tensor({1}, {1.0 / std::sqrt(2.0)}));
  }
  LossExpr loss() const { return mean(-log_prob(dist)); }
  SampleMap batch() const { return {{"x", Tensor({1, 1}, {0.0})}}; }
};

std::map<std::string, Array> snapshot(const ParameterStore& store) {
  std::map<std::string, Array> out;
  for (const auto& name : store.names()) out.emplace(name, store.value(name).data());
  return out;
}

bool same(const std::map<std::string, Array>& a, const std::map<std::string, Array>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, v] : a)
    if (!(b.at(name) == v).all()) return false;
  return true;
}

SampleMap vae_batch(std::uint64_t seed) {
  Rng rng(seed);
  return {{"x", bernoulli({32, 64}, 0.4, rng)}};
}

}  // namespace

TEST(Model, SgdOnQuadratic) {
  Quadratic q;
  Model m(q.store, q.loss(), {q.dist}, OptimizerConfig::sgd(0.1));
  Rng rng(0);
  m.train(q.batch(), rng);
  EXPECT_NEAR(q.store->value("mu").item(), 0.8, 1e-12);
  EXPECT_EQ(m.steps(), 1);
}

TEST(Model, ZeroLearningRateTrainEqualsTest) {
  Vae vae = build_vae(VaeConfig{});
  Model m = vae_model(vae.store, vae.q, vae.p, vae.prior, OptimizerConfig::adam(0.0), KlMode::analytical);
  const auto before = snapshot(*vae.store);
  Rng r1(5), r2(5), r3(5);
  const double tested = m.test(vae_batch(1), r1);
  EXPECT_TRUE(same(before, snapshot(*vae.store)));
  EXPECT_EQ(m.test(vae_batch(1), r3), tested);
  EXPECT_EQ(m.train(vae_batch(1), r2), tested);
  EXPECT_TRUE(same(before, snapshot(*vae.store)));
}

TEST(Model, DeterministicTrajectories) {
  std::vector<double> runs[2];
  for (auto& losses : runs) {
    Vae vae = build_vae(VaeConfig{});
    Model m = vae_model(vae.store, vae.q, vae.p, vae.prior, OptimizerConfig::adam(1e-2), KlMode::monte_carlo);
    Rng rng(3);
    for (int i = 0; i < 5; ++i) losses.push_back(m.train(vae_batch(i), rng));
  }
  EXPECT_EQ(runs[0], runs[1]);
}

TEST(Model, NonFiniteLossLeavesParametersUntouched) {
  Quadratic q;
  Model m(q.store, placeholder("k", 1.0) * q.loss(), {q.dist}, OptimizerConfig::adam(0.1));
  Rng rng(0);
  m.train(q.batch(), rng);
  const auto before = snapshot(*q.store);
  m.set_placeholders({{"k", std::numeric_limits<double>::infinity()}});
  EXPECT_THROW(m.train(q.batch(), rng), NonFiniteError);
  EXPECT_TRUE(same(before, snapshot(*q.store)));
  EXPECT_EQ(m.steps(), 1);
  m.set_placeholders({});
  m.train(q.batch(), rng);
  EXPECT_EQ(m.steps(), 2);
}

TEST(Model, FailingLaterPhaseRollsBackEarlierPhases) {
  Quadratic a, b;
  b.store = a.store;
  a.store->add("nu", Tensor({1}, {2.0}));
  b.dist = make_normal(DistSpec("p", {"y"}), ParamRef(a.store, "nu"), Tensor({1}, {1.0}));
  const LossExpr second = mean(-log_prob(b.dist)) / placeholder("d", 1.0);
  Model m(a.store, {Phase{"first", a.loss(), {a.dist}, OptimizerConfig::sgd(0.1)},
                    Phase{"second", second, {b.dist}, OptimizerConfig::sgd(0.1)}});
  const SampleMap batch{{"x", Tensor({1, 1}, {0.0})}, {"y", Tensor({1, 1}, {0.0})}};
  const auto before = snapshot(*a.store);
  m.set_placeholders({{"d", 0.0}});
  Rng rng(0);
  EXPECT_THROW(m.train(batch, rng), DomainError);
  EXPECT_TRUE(same(before, snapshot(*a.store)));
}

TEST(Model, PhaseUpdatesOnlyItsTrainables) {
  auto store = std::make_shared<ParameterStore>();
  store->add("a", Tensor({1}, {0.5}));
  store->add("b", Tensor({1}, {-0.5}));
  auto pa = make_normal(DistSpec("p", {"x"}), ParamRef(store, "a"), Tensor({1}, {1.0}));
  auto pb = make_normal(DistSpec("p", {"y"}), ParamRef(store, "b"), Tensor({1}, {1.0}));
  Model m(store, mean(-log_prob(pa) - log_prob(pb)), {pa}, OptimizerConfig::adam(0.1));
  const Array b_before = store->value("b").data();
  Rng rng(0);
  m.train({{"x", Tensor({1, 1}, {2.0})}, {"y", Tensor({1, 1}, {2.0})}}, rng);
  EXPECT_TRUE((store->value("b").data() == b_before).all());
  EXPECT_NE(store->value("a").item(), 0.5);
  EXPECT_EQ(m.phase_parameters(0), std::vector<std::string>{"a"});
}

TEST(Model, ConstructionErrors) {
  Quadratic q;
  EXPECT_THROW(Model(q.store, -log_prob(q.dist), {q.dist}, OptimizerConfig::sgd(0.1)), ConfigError);
  EXPECT_THROW(Model(q.store, q.loss(), {}, OptimizerConfig::sgd(0.1)), ConfigError);
  EXPECT_THROW(Model(q.store, q.loss(), {q.dist}, OptimizerConfig::sgd(-0.1)), ConfigError);
}

TEST(Model, WarnsOnUnreachableTrainable) {
  Quadratic q;
  q.store->add("other", Tensor({1}, {0.0}));
  auto unused = make_normal(DistSpec("r", {"w"}), ParamRef(q.store, "other"), Tensor({1}, {1.0}));
  testing::internal::CaptureStderr();
  Model m(q.store, q.loss(), {q.dist, unused}, OptimizerConfig::sgd(0.1));
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("r(w)"), std::string::npos) << err;
}

TEST(VaeModel, DegenerateToyLoss) {
  auto prior = standard_normal_prior("z", 1);
  auto q = make_normal(DistSpec("q", {"z"}, {"x"}), ParamNetwork{[](const SampleMap& in, Session&) {
                         const Shape s = in.at("x").shape();
                         return TensorMap{{"loc", Tensor::zeros(s)}, {"scale", Tensor::ones(s)}};
                       }, {}}, Link::none);
  auto p = make_normal(DistSpec("p", {"x"}, {"z"}), ParamNetwork{[](const SampleMap& in, Session&) {
                         return TensorMap{{"loc", in.at("z")}, {"scale", Tensor::ones(in.at("z").shape())}};
                       }, {}}, Link::none);
  const SampleMap x{{"x", Tensor({1, 1}, {0.0})}};
  const int n = 100000;
  EvalContext ctx;
  ctx.data = x;
  ctx.mc_samples = n;
  ctx.rng = Rng(1);
  const double analytical = eval(vae_loss(q, p, prior, KlMode::analytical), ctx).item();
  ctx.rng = Rng(2);
  const double mc = eval(vae_loss(q, p, prior, KlMode::monte_carlo), ctx).item();
  // Both estimate E[z^2/2] + ln(2 pi)/2 with per-draw variance 1/2.
  const double se = std::sqrt(0.5 / n);
  EXPECT_NEAR(analytical, 1.418938533204673, 3 * se);
  EXPECT_NEAR(analytical, mc, 3 * std::sqrt(2.0) * se);
}

TEST(GanModel, OneUpdatePerPhaseAndTrace) {
  Gan gan = build_gan(GanConfig{});
  Model m = gan_model(gan.store, gan.generator, "x", gan.discriminator, OptimizerConfig::adam(1e-3),
                      OptimizerConfig::adam(1e-3));
  ASSERT_EQ(m.phases().size(), 2u);
  EXPECT_EQ(m.phases()[0].name, "discriminator");
  TrainTrace trace;
  m.set_trace(&trace);
  Rng rng(0);
  m.train({{"x", Tensor({4, 1}, {1.8, 2.1, 2.4, 1.6})}}, rng);
  EXPECT_EQ(trace.events, (std::vector<std::string>{"zero_grad", "eval", "backward", "step", "zero_grad", "eval",
                                                     "backward", "step"}));
  EXPECT_EQ(m.steps(), 1);
}

TEST(GanModel, ReportedLossAtHalfDiscriminator) {
  Gan gan = build_gan(GanConfig{});
  for (const auto& name : gan.discriminator->parameters())
    gan.store->set_value(name, Tensor::zeros(gan.store->value(name).shape()));
  Model m = gan_model(gan.store, gan.generator, "x", gan.discriminator, OptimizerConfig::sgd(0.0),
                      OptimizerConfig::sgd(0.0));
  Rng rng(0);
  EXPECT_NEAR(m.train({{"x", Tensor({2, 1}, {2.0, 2.5})}}, rng), 1.386294361119891, 1e-12);
}

TEST(GanModel, FrozenGeneratorDiscriminatorLearnsSeparableData) {
  GanConfig cfg;
  cfg.gen_scale = 0.1;
  cfg.gen_shift = -2.0;
  Gan gan = build_gan(cfg);
  Model m = gan_model(gan.store, gan.generator, "x", gan.discriminator, OptimizerConfig::adam(0.0),
                      OptimizerConfig::adam(1e-2));
  std::map<std::string, Array> gen_before;
  for (const auto& name : gan.generator->parameters()) gen_before.emplace(name, gan.store->value(name).data());
  Rng data_rng(1), rng(2);
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) {
    const Tensor x = standard_normal({32, 1}, data_rng) * 0.1 + 2.0;
    losses.push_back(m.train({{"x", x}}, rng));
  }
  for (const auto& [name, v] : gen_before) EXPECT_TRUE((gan.store->value(name).data() == v).all()) << name;
  double head = 0, tail = 0;
  for (int i = 0; i < 10; ++i) {
    head += losses[i];
    tail += losses[losses.size() - 1 - i];
  }
  EXPECT_LT(tail, 0.5 * head);
}
