// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "dgm/data.hpp"

#include <cstdio>
#include <iterator>
#include <numeric>
#include <sstream>

namespace dgm {

namespace {

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

}  // namespace

Dataset parse_idx(const std::vector<unsigned char>& bytes, const std::string& source) {
  if (bytes.size() < 4) {
    throw Error(source + ": truncated header, expected at least 4 bytes, got " + std::to_string(bytes.size()));
  }
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 || (bytes[3] != 1 && bytes[3] != 3)) {
    char magic[16];
    std::snprintf(magic, sizeof magic, "%02x %02x %02x %02x", bytes[0], bytes[1], bytes[2], bytes[3]);
    throw Error(source + ": bad magic " + magic + ", expected 00 00 08 01 or 00 00 08 03");
  }
  const std::size_t dims = bytes[3];
  const std::size_t header = 4 + 4 * dims;
  if (bytes.size() < header) {
    throw Error(source + ": truncated header, expected " + std::to_string(header) + " bytes, got " +
                std::to_string(bytes.size()));
  }
  Shape shape;
  for (std::size_t d = 0; d < dims; ++d) shape.push_back(static_cast<Index>(read_be32(bytes, 4 + 4 * d)));
  const auto payload = static_cast<std::size_t>(shape_size(shape));
  if (bytes.size() - header != payload) {
    throw Error(source + ": payload size mismatch, expected " + std::to_string(payload) + " bytes, got " +
                std::to_string(bytes.size() - header));
  }
  if (shape[0] < 1) throw Error(source + ": no examples");

  Array raw(static_cast<Index>(payload));
  for (std::size_t i = 0; i < payload; ++i) raw[static_cast<Index>(i)] = bytes[header + i];

  Dataset ds;
  ds.source = source;
  const Index n = shape[0];
  if (dims == 1) {
    ds.labels = Tensor({n}, raw);
    ds.examples = Tensor({n, 1}, raw);
    ds.feature_shape = {1};
  } else {
    ds.feature_shape = Shape(shape.begin() + 1, shape.end());
    ds.examples = Tensor({n, shape_size(ds.feature_shape)}, raw / 255.0);
  }
  return ds;
}

Dataset load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path + ": cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_idx(bytes, path);
}

Dataset synth_data(Index n, Index side, std::uint64_t seed) {
  if (n < 1) throw ConfigError("synth_data: n must be at least 1");
  if (side < 2) throw ConfigError("synth_data: side must be at least 2");
  Rng rng(seed);
  const Index d = side * side;
  Array x(n * d), y(n);
  for (Index i = 0; i < n; ++i) {
    const int label = rng.uniform01() <= 0.5 ? 0 : 1;
    y[i] = label;
    for (Index r = 0; r < side; ++r) {
      for (Index c = 0; c < side; ++c) {
        const bool left = 2 * c < side;
        const double p = (left == (label == 0)) ? 0.9 : 0.1;
        x[i * d + r * side + c] = rng.uniform01() <= p ? 1.0 : 0.0;
      }
    }
  }
  Dataset ds;
  ds.examples = Tensor({n, d}, std::move(x));
  ds.labels = Tensor({n}, std::move(y));
  ds.source = "synthetic";
  ds.feature_shape = {side, side};
  return ds;
}

std::vector<std::vector<Index>> minibatches(Index n, Index batch_size, Rng& rng) {
  if (batch_size < 1) throw ConfigError("minibatches: batch size must be positive");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  std::vector<std::vector<Index>> out;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    out.emplace_back(perm.begin() + start, perm.begin() + end);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc), path_(path) {
  if (!out_) throw Error(path + ": cannot open for writing");
  out_ << "epoch,step,loss,wall_ms\n";
  out_.flush();
}

void MetricsWriter::row(long epoch, long step, double loss, double wall_ms) {
  char ms[32];
  std::snprintf(ms, sizeof ms, "%.6f", wall_ms);
  out_ << epoch << ',' << step << ',' << format_double(loss) << ',' << ms << '\n';
  out_.flush();
  if (!out_) throw Error(path_ + ": write failed");
}

void write_parameters(const ParameterStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  for (const auto& [name, p] : store.entries()) {
    out << name << ' ' << p.shape.size();
    for (Index d : p.shape) out << ' ' << d;
    for (Index i = 0; i < p.value->size(); ++i) out << ' ' << format_double((*p.value)[i]);
    out << '\n';
  }
  if (!out) throw Error(path + ": write failed");
}

std::vector<std::pair<std::string, Tensor>> read_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(path + ": cannot open");
  std::vector<std::pair<std::string, Tensor>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string name;
    std::size_t rank = 0;
    ss >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) ss >> d;
    Array values(shape_size(shape));
    for (Index i = 0; i < values.size(); ++i) ss >> values[i];
    if (!ss) throw Error(path + ": malformed line for '" + name + "'");
    out.emplace_back(name, Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

}  // namespace dgm
