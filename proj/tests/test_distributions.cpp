// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dgm/families.hpp"
#include "dgm/product.hpp"
#include "oracles.hpp"

using namespace dgm;

namespace {

std::shared_ptr<const Normal> fixed_normal(const std::string& sym, const std::string& var,
                                           std::vector<std::string> cond, double loc, double scale) {
  return make_normal(DistSpec(sym, {var}, std::move(cond)), Tensor({1}, {loc}), Tensor({1}, {scale}));
}

/// N(x; shift + z, 1) conditioned on z.
std::shared_ptr<const Normal> shifted(const std::string& var, const std::string& cond, double shift) {
  ParamNetwork net{[cond, shift](const SampleMap& in, Session&) {
                     return TensorMap{{"loc", flatten_batch(in.at(cond)) + shift},
                                      {"scale", Tensor::ones({in.at(cond).shape()[0], 1})}};
                   },
                   {}};
  return make_normal(DistSpec("p", {var}, {cond}), net, Link::none);
}

}  // namespace

TEST(DistSpec, AtomsAndValidation) {
  EXPECT_EQ(DistSpec("p", {"z"}).atom(), "p(z)");
  EXPECT_EQ(DistSpec("q", {"z"}, {"x"}).atom(), "q(z|x)");
  EXPECT_EQ(DistSpec("p", {"x"}, {"z", "y"}).atom(), "p(x|z,y)");
  EXPECT_THROW(DistSpec("p", {"a b"}), ConfigError);
  EXPECT_THROW(DistSpec("p", {"a|b"}), ConfigError);
  EXPECT_THROW(DistSpec("p", {"x"}, {"x"}), ConfigError);
  EXPECT_THROW(DistSpec("p", {}), ConfigError);
}

TEST(Normal, LogProbValues) {
  auto n = standard_normal_prior("x", 1);
  EXPECT_NEAR(get_log_prob(*n, {{"x", Tensor({1, 1}, {0.0})}}).item(), -0.918938533204673, 1e-12);
  const Tensor lp = get_log_prob(*n, {{"x", Tensor({2, 1}, {0.0, 1.0})}});
  EXPECT_NEAR(lp[0], -0.918938533204673, 1e-12);
  EXPECT_NEAR(lp[1], -1.418938533204673, 1e-12);
}

TEST(Normal, MatchesClosedFormAtRandomPoints) {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double mu = 4 * rng.uniform01() - 2, sigma = 0.1 + 2 * rng.uniform01(), x = 6 * rng.uniform01() - 3;
    auto n = fixed_normal("p", "x", {}, mu, sigma);
    ASSERT_NEAR(get_log_prob(*n, {{"x", Tensor({1}, {x})}}).item(), oracle::normal_logpdf(x, mu, sigma), 1e-9);
  }
}

TEST(Normal, EventDimensionsAreSummed) {
  auto n = make_normal(DistSpec("p", {"x"}), Tensor({2}, {0.0, 1.0}), Tensor({2}, {1.0, 2.0}));
  const double expected = oracle::normal_logpdf(0.5, 0.0, 1.0) + oracle::normal_logpdf(-1.0, 1.0, 2.0);
  EXPECT_NEAR(get_log_prob(*n, {{"x", Tensor({1, 2}, {0.5, -1.0})}}).item(), expected, 1e-12);
}

TEST(Normal, SamplingDeterminismAndDegenerateScale) {
  auto n = standard_normal_prior("z", 3);
  Rng a(9), b(9);
  EXPECT_TRUE(allclose(sample(*n, {}, 4, a).at("z"), sample(*n, {}, 4, b).at("z"), 0, 0));
  auto point = fixed_normal("p", "x", {}, 5.0, 1e-12);
  Rng rng(0);
  const Tensor draws = sample(*point, {}, 100, rng).at("x");
  EXPECT_LT((draws.data() - 5.0).abs().maxCoeff(), 1e-9);
}

TEST(Normal, TinyFixedScaleIsRaisedToFloor) {
  auto n = fixed_normal("p", "x", {}, 0.0, 1e-20);
  Rng rng(0);
  Session s(rng, false);
  EXPECT_DOUBLE_EQ(n->params({}, 1, s).scale.item(), 1e-12);
  EXPECT_THROW(fixed_normal("p", "x", {}, 0.0, 0.0), ConfigError);
}

TEST(Normal, NetworkScaleIsPositive) {
  ParamNetwork net{[](const SampleMap& in, Session&) {
                     const Index n = in.at("x").shape()[0];
                     return TensorMap{{"loc", Tensor::zeros({n, 1})}, {"scale", Tensor::full({n, 1}, -40.0)}};
                   },
                   {}};
  auto q = make_normal(DistSpec("q", {"z"}, {"x"}), net);
  Rng rng(0);
  Session s(rng, false);
  const auto p = q->params({{"x", Tensor::zeros({2, 1})}}, 2, s);
  EXPECT_TRUE((p.scale.data() > 0).all());
}

TEST(Normal, ReparameterizedGradientMatchesFixedNoiseDifferences) {
  auto store = std::make_shared<ParameterStore>();
  store->add("mu", Tensor({1}, {0.7}));
  store->add("sigma", Tensor({1}, {1.3}));
  auto n = make_normal(DistSpec("q", {"z"}), ParamRef(store, "mu"), ParamRef(store, "sigma"));
  auto estimate = [&](bool record) {
    Rng rng(21);
    Session s(rng, record);
    const Tensor z = n->sample({}, 256, true, s).at("z");
    return mean(square(z));
  };
  store->zero_grad();
  backward(estimate(true), *store);
  const auto fd = oracle::central_diff([&] { return estimate(false).item(); }, *store, {"mu", "sigma"}, 1e-5);
  for (const char* name : {"mu", "sigma"}) {
    const double a = store->gradient(name).item(), f = fd.at(name)[0];
    EXPECT_NEAR(a, f, 1e-3 * std::abs(f)) << name;
  }
}

TEST(Bernoulli, LogMassAndValidation) {
  auto b = make_bernoulli(DistSpec("p", {"y"}), Tensor({1}, {0.7}));
  EXPECT_NEAR(get_log_prob(*b, {{"y", Tensor({1, 1}, {1.0})}}).item(), -0.356674943938732, 1e-12);
  EXPECT_NEAR(get_log_prob(*b, {{"y", Tensor({1, 1}, {0.0})}}).item(), std::log(0.3), 1e-12);
  EXPECT_THROW(get_log_prob(*b, {{"y", Tensor({1, 1}, {2.0})}}), DomainError);
  EXPECT_THROW(make_bernoulli(DistSpec("p", {"y"}), Tensor({1}, {1.0})), ConfigError);
}

TEST(Bernoulli, SamplingFrequencyAndReparamRejection) {
  auto b = make_bernoulli(DistSpec("p", {"y"}), Tensor({1}, {0.25}));
  Rng rng(4);
  const double frac = mean(sample(*b, {}, 40000, rng).at("y")).item();
  EXPECT_NEAR(frac, 0.25, 4 * std::sqrt(0.25 * 0.75 / 40000));
  Session s(rng, true);
  EXPECT_THROW(b->sample({}, 1, true, s), UnsupportedOperation);
}

TEST(Deterministic, SampleAndNoDensity) {
  auto prior = standard_normal_prior("z", 1);
  auto twice = make_deterministic(DistSpec("f", {"x"}, {"z"}), ParamNetwork{[](const SampleMap& in, Session&) {
                                    return TensorMap{{"x", 2.0 * in.at("z")}};
                                  }, {}});
  auto joint = product({twice, prior});
  Rng rng(2);
  const SampleMap s = sample(*joint, {}, 5, rng);
  EXPECT_TRUE(allclose(s.at("x"), 2.0 * s.at("z"), 0, 0));
  EXPECT_THROW(get_log_prob(*twice, s), UnsupportedOperation);
}

TEST(Sample, IncludesInputsAndChecksConditions) {
  auto q = shifted("z", "x", 0.0);
  Rng rng(0);
  const SampleMap out = sample(*q, {{"x", Tensor::zeros({3, 1})}}, 3, rng);
  EXPECT_EQ(out.size(), 2u);
  EXPECT_TRUE(out.count("x"));
  try {
    sample(*q, {{"y", Tensor::zeros({3, 1})}}, 3, rng);
    FAIL() << "expected MissingVariable";
  } catch (const MissingVariable& e) {
    EXPECT_EQ(e.names(), std::vector<std::string>{"x"});
  }
  EXPECT_THROW(sample(*q, {{"x", Tensor::zeros({3, 1})}}, 4, rng), ShapeError);
}

TEST(Product, LogProbIsSumOfFactors) {
  auto x = standard_normal_prior("x", 1);
  auto y = make_bernoulli(DistSpec("p", {"y"}), Tensor({1}, {0.7}));
  auto joint = x * y;
  const SampleMap v{{"x", Tensor({1, 1}, {0.0})}, {"y", Tensor({1, 1}, {1.0})}};
  EXPECT_NEAR(get_log_prob(*joint, v).item(), -1.275613477143405, 1e-12);
}

TEST(Product, AncestralOrderAndGraph) {
  auto px = shifted("x", "z", 0.0);
  auto pz = standard_normal_prior("z", 1);
  auto joint = product({px, pz});
  EXPECT_EQ(joint->ancestral_order(), (std::vector<std::size_t>{1, 0}));
  using G = std::vector<std::pair<std::string, std::vector<std::string>>>;
  EXPECT_EQ(joint->graph(), (G{{"z", {}}, {"x", {"z"}}}));
  EXPECT_EQ(product({pz})->graph(), (G{{"z", {}}}));

  auto x_zy = make_normal(DistSpec("p", {"x"}, {"z", "y"}), ParamNetwork{[](const SampleMap& in, Session&) {
                            return TensorMap{{"loc", in.at("z") + in.at("y")}, {"scale", Tensor::scalar(1.0)}};
                          }, {}}, Link::none);
  auto z_y = shifted("z", "y", 1.0);
  auto y = standard_normal_prior("y", 1);
  auto chain = product({x_zy, z_y, y});
  EXPECT_EQ(chain->graph(), (G{{"y", {}}, {"z", {"y"}}, {"x", {"z", "y"}}}));
  Rng rng(5);
  const SampleMap s = sample(*chain, {}, 4, rng);
  EXPECT_EQ(s.size(), 3u);
}

TEST(Product, Errors) {
  auto x_given_z = shifted("x", "z", 0.0);
  auto z_given_x = shifted("z", "x", 0.0);
  EXPECT_THROW(product({x_given_z, z_given_x}), GraphError);
  auto px = standard_normal_prior("x", 1);
  auto qx = standard_normal_prior("x", 1, "q");
  EXPECT_THROW(product({px, qx}), GraphError);
}

TEST(Product, FormattingAndNesting) {
  auto px = shifted("x", "z", 0.0);
  auto pz = standard_normal_prior("z", 1);
  auto joint = px * pz;
  EXPECT_EQ(format_text(*joint), "p(x,z) = p(x|z)p(z)");
  EXPECT_EQ(format_latex(*joint), "p(x,z) = p(x|z)p(z)");
  EXPECT_EQ(format_text(*pz), "p(z)");
  auto py = standard_normal_prior("y", 1);
  auto nested = std::dynamic_pointer_cast<const Product>(joint * py);
  ASSERT_TRUE(nested);
  EXPECT_EQ(nested->factors().size(), 3u);
  EXPECT_EQ(format_text(*nested), "p(x,z,y) = p(x|z)p(z)p(y)");
}

TEST(Product, ConditionedOnExternalVariable) {
  auto z_given_c = shifted("z", "c", 0.0);
  auto x_given_z = shifted("x", "z", 0.0);
  auto joint = product({x_given_z, z_given_c});
  EXPECT_EQ(joint->cond_var(), std::vector<std::string>{"c"});
  EXPECT_EQ(format_text(*joint), "p(x,z|c) = p(x|z)p(z|c)");
  Rng rng(0);
  EXPECT_THROW(sample(*joint, {}, 2, rng), MissingVariable);
}
