// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "dgm/tensor.hpp"

namespace dgm {

/// Counter-based generator: draw k is SplitMix64's finalizer applied to
/// seed + k * 0x9E3779B97F4A7C15. The state is (seed, counter), so a stream is
/// reproduced exactly by copying the state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on (0, 1]; 53 random bits.
  double uniform01();
  /// Box-Muller; consumes two draws per value.
  double standard_normal();

  /// Independent stream derived from this state; advances this generator once.
  Rng split();

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

enum class DrawKind { standard_normal, uniform01, bernoulli };

/// Tensor of independent draws. `p` is only read for bernoulli and must lie in [0, 1].
Tensor rng_draw(DrawKind kind, const Shape& shape, Rng& rng, double p = 0.5);

inline Tensor standard_normal(const Shape& shape, Rng& rng) { return rng_draw(DrawKind::standard_normal, shape, rng); }
inline Tensor uniform01(const Shape& shape, Rng& rng) { return rng_draw(DrawKind::uniform01, shape, rng); }
inline Tensor bernoulli(const Shape& shape, double p, Rng& rng) { return rng_draw(DrawKind::bernoulli, shape, rng, p); }

}  // namespace dgm
