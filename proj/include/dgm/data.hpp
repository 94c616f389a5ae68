// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dgm/parameters.hpp"
#include "dgm/rng.hpp"

namespace dgm {

/// Examples are stored flattened as [N, D]; `feature_shape` keeps the original
/// per-example dimensions.
struct Dataset {
  Tensor examples;
  std::optional<Tensor> labels;  // [N]
  std::string source;
  Shape feature_shape;

  Index size() const { return examples.shape().at(0); }
  Index features() const { return examples.shape().at(1); }
};

/// IDX (big-endian, unsigned-byte payload). Image files (magic 0x00000803)
/// are scaled to [0, 1]. Label files (0x00000801) fill `labels` with the raw
/// values and carry the same values as a single-column `examples`.
Dataset load_idx(const std::string& path);
Dataset parse_idx(const std::vector<unsigned char>& bytes, const std::string& source = "idx");

/// `n` binarized side x side images. Half are drawn from prototype 0 (left
/// half on with probability 0.9, right half 0.1) and half from its mirror
/// image; labels hold the prototype index.
Dataset synth_data(Index n, Index side, std::uint64_t seed);

/// Shuffled minibatch row indices covering every example once; the last batch may be short.
std::vector<std::vector<Index>> minibatches(Index n, Index batch_size, Rng& rng);

/// Append-only CSV with header `epoch,step,loss,wall_ms`.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void row(long epoch, long step, double loss, double wall_ms);

 private:
  std::ofstream out_;
  std::string path_;
};

/// `%.17g` rendering, so values round-trip exactly.
std::string format_double(double v);

/// One line per parameter: name, rank, dims, then row-major values.
void write_parameters(const ParameterStore& store, const std::string& path);
/// Values of a dump written by `write_parameters`, keyed by name.
std::vector<std::pair<std::string, Tensor>> read_parameters(const std::string& path);

}  // namespace dgm
