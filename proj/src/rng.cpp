// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/rng.hpp"

#include <cmath>
#include <numbers>

namespace dgm {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGamma);
}

double Rng::uniform01() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

double Rng::standard_normal() {
  const double u1 = uniform01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split() { return Rng(mix64(next_u64() ^ 0xD1B54A32D192ED03ULL)); }

Tensor rng_draw(DrawKind kind, const Shape& shape, Rng& rng, double p) {
  if (kind == DrawKind::bernoulli && !(p >= 0.0 && p <= 1.0)) {
    throw ConfigError("bernoulli probability must lie in [0, 1]");
  }
  const Index n = shape_size(shape);
  Array values(n);
  for (Index i = 0; i < n; ++i) {
    switch (kind) {
      case DrawKind::standard_normal: values[i] = rng.standard_normal(); break;
      case DrawKind::uniform01: values[i] = rng.uniform01(); break;
      // uniform01 is in (0, 1], so p = 1 always succeeds and p = 0 never does.
      case DrawKind::bernoulli: values[i] = rng.uniform01() <= p ? 1.0 : 0.0; break;
    }
  }
  return Tensor(shape, std::move(values));
}

}  // namespace dgm
