// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dgm/data.hpp"
#include "oracles.hpp"

using namespace dgm;

namespace {

std::vector<unsigned char> header(unsigned char type, std::vector<std::uint32_t> dims) {
  std::vector<unsigned char> out{0, 0, 0x08, type};
  for (auto d : dims)
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<unsigned char>(d >> shift));
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(Idx, LabelFile) {
  auto bytes = header(0x01, {3});
  bytes.insert(bytes.end(), {5, 0, 4});
  const Dataset d = parse_idx(bytes);
  ASSERT_TRUE(d.labels.has_value());
  EXPECT_TRUE(allclose(*d.labels, Tensor({3}, {5, 0, 4}), 0, 0));
  EXPECT_EQ(d.size(), 3);
}

TEST(Idx, ImageFileIsScaled) {
  auto bytes = header(0x03, {1, 2, 2});
  bytes.insert(bytes.end(), {0, 255, 0, 255});
  const Dataset d = parse_idx(bytes);
  EXPECT_TRUE(allclose(d.examples, Tensor({1, 4}, {0, 1, 0, 1}), 0, 0));
  EXPECT_EQ(d.feature_shape, (Shape{2, 2}));
  EXPECT_FALSE(d.labels.has_value());
}

TEST(Idx, BadMagicAndTruncation) {
  std::vector<unsigned char> bad{0, 0, 0x09, 0x03, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 7};
  try {
    parse_idx(bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos) << e.what();
  }
  auto bytes = header(0x03, {2, 2, 2});
  bytes.insert(bytes.end(), {1, 2, 3});
  try {
    parse_idx(bytes);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('8'), std::string::npos) << msg;
    EXPECT_NE(msg.find('3'), std::string::npos) << msg;
  }
}

TEST(Idx, LoadFromDisk) {
  const auto path = oracle::temp_path("images.idx").string();
  auto bytes = header(0x03, {2, 1, 2});
  bytes.insert(bytes.end(), {51, 102, 153, 204});
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const Dataset d = load_idx(path);
  EXPECT_TRUE(allclose(d.examples, Tensor({2, 2}, {0.2, 0.4, 0.6, 0.8})));
  EXPECT_THROW(load_idx(path + ".missing"), Error);
}

TEST(Synth, DeterministicAndBalanced) {
  const Dataset a = synth_data(10000, 8, 4), b = synth_data(10000, 8, 4);
  EXPECT_TRUE(allclose(a.examples, b.examples, 0, 0));
  ASSERT_TRUE(a.labels.has_value());
  const Array labels = a.labels->data();
  const double frac_a = (labels == 0.0).cast<double>().mean();
  EXPECT_NEAR(frac_a, 0.5, 0.015);

  const auto x = a.examples.matrix();
  double left_sum = 0, right_sum = 0;
  long count = 0;
  for (Index i = 0; i < a.size(); ++i) {
    if (labels[i] != 0.0) continue;
    ++count;
    for (Index r = 0; r < 8; ++r)
      for (Index c = 0; c < 8; ++c) (c < 4 ? left_sum : right_sum) += x(i, r * 8 + c);
  }
  EXPECT_NEAR(left_sum / (count * 32.0), 0.9, 0.01);
  EXPECT_NEAR(right_sum / (count * 32.0), 0.1, 0.01);
  EXPECT_TRUE(((x.array() == 0.0) || (x.array() == 1.0)).all());
}

TEST(Minibatches, CoverEveryIndexOnce) {
  Rng rng(0);
  const auto batches = minibatches(10, 4, rng);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches.back().size(), 2u);
  std::vector<int> seen(10, 0);
  for (const auto& b : batches)
    for (Index i : b) ++seen[static_cast<std::size_t>(i)];
  EXPECT_EQ(seen, std::vector<int>(10, 1));
}

TEST(Metrics, HeaderAndRows) {
  const auto path = oracle::temp_path("metrics.csv").string();
  {
    MetricsWriter w(path);
    w.row(1, 1, 0.5, 1.25);
    w.row(1, 2, 0.25, 0.0);
  }
  const auto lines = read_lines(path);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "epoch,step,loss,wall_ms");
  EXPECT_EQ(lines[1].rfind("1,1,0.5,", 0), 0u) << lines[1];
  std::stringstream row(lines[2]);
  std::vector<std::string> cells;
  for (std::string c; std::getline(row, c, ',');) cells.push_back(c);
  EXPECT_EQ(cells.size(), 4u);
  EXPECT_THROW(MetricsWriter("/nonexistent-dir/metrics.csv"), Error);
}

TEST(Parameters, DumpRoundTrip) {
  ParameterStore store;
  store.add("enc.w0", Tensor({2, 3}, {0.1, -2.5, 3.0, 1e-17, 4.25, -0.3333333333333333}));
  store.add("bias", Tensor({1}, {7.0}));
  const auto path = oracle::temp_path("params.txt").string();
  write_parameters(store, path);
  const auto back = read_parameters(path);
  ASSERT_EQ(back.size(), 2u);
  for (const auto& [name, t] : back) {
    EXPECT_EQ(t.shape(), store.value(name).shape());
    EXPECT_TRUE((t.data() == store.value(name).data()).all()) << name;
  }
}
