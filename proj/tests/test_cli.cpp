// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "dgm/data.hpp"
#include "oracles.hpp"

using namespace dgm;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> column(const std::string& path, std::size_t index) {
  std::ifstream in(path);
  std::vector<std::string> cells;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    for (std::size_t i = 0; i <= index; ++i) std::getline(row, cell, ',');
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace

TEST(Cli, FlagErrorsExitTwo) {
  EXPECT_EQ(invoke({"vae-train", "--kl-mode", "bogus"}).code, 2);
  EXPECT_EQ(invoke({"bench", "--steps", "0"}).code, 2);
  EXPECT_EQ(invoke({"gan-train", "--data", "mnist"}).code, 2);
  EXPECT_EQ(invoke({"flow-train", "--data", "elsewhere"}).code, 2);
  EXPECT_EQ(invoke({"describe", "--model", "nope"}).code, 2);
  EXPECT_EQ(invoke({"describe"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  const Outcome bad = invoke({"vae-train", "--epochs", "x"});
  EXPECT_EQ(bad.code, 2);
  EXPECT_FALSE(bad.err.empty());
}

TEST(Cli, DataErrorsExitOne) {
  const Outcome r = invoke({"vae-train", "--data", "/nonexistent/train-images.idx", "--epochs", "1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, DescribeVae) {
  const Outcome r = invoke({"describe", "--model", "vae"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\np(x,z) = p(x|z)p(z)\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("D_KL[q(z|x)||p(z)]"), std::string::npos);
  EXPECT_NE(r.out.find("\\mathbb{E}_{q(z|x)}"), std::string::npos);
  EXPECT_EQ(invoke({"describe", "--model", "vae"}).out, r.out);
}

TEST(Cli, DescribeOtherModels) {
  for (const char* model : {"gan", "flow", "composite-demo"}) {
    const Outcome r = invoke({"describe", "--model", model});
    EXPECT_EQ(r.code, 0) << model << r.err;
    EXPECT_FALSE(r.out.empty());
  }
  const std::string composite = invoke({"describe", "--model", "composite-demo"}).out;
  EXPECT_NE(composite.find("beta"), std::string::npos) << composite;
  EXPECT_NE(composite.find("log q(y|x)"), std::string::npos) << composite;
}

TEST(Cli, VaeTrainWritesMetricsAndParameters) {
  const auto metrics = oracle::temp_path("cli_vae.csv").string();
  const auto params = oracle::temp_path("cli_vae.params").string();
  const Outcome r = invoke({"vae-train", "--num-examples", "256", "--epochs", "2", "--batch-size", "64",
                            "--metrics-out", metrics, "--params-out", params});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("epoch 2"), std::string::npos) << r.out;
  EXPECT_EQ(column(metrics, 2).size(), 8u);
  EXPECT_FALSE(read_parameters(params).empty());
}

TEST(Cli, SameSeedSameLossColumn) {
  std::vector<std::string> columns[2];
  for (int run = 0; run < 2; ++run) {
    const auto metrics = oracle::temp_path("cli_det_" + std::to_string(run) + ".csv").string();
    ASSERT_EQ(invoke({"vae-train", "--num-examples", "128", "--epochs", "2", "--batch-size", "32", "--kl-mode",
                      "monte_carlo", "--seed", "7", "--metrics-out", metrics})
                  .code,
              0);
    columns[run] = column(metrics, 2);
  }
  EXPECT_EQ(columns[0], columns[1]);
  EXPECT_FALSE(columns[0].empty());
}

TEST(Cli, FlowTrainImproves) {
  std::ostringstream log;
  cli::FlowTrainOptions opt;
  opt.steps = 300;
  opt.lr = 1e-2;
  const auto report = cli::train_flow(opt, log);
  EXPECT_LT(report.final_nll, report.initial_nll);
}

TEST(Cli, GanTrainRuns) {
  const auto metrics = oracle::temp_path("cli_gan.csv").string();
  const Outcome r = invoke({"gan-train", "--steps", "20", "--metrics-out", metrics});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(column(metrics, 2).size(), 20u);
}

TEST(Cli, SmallBenchGridAndTimedRegion) {
  cli::BenchOptions opt;
  opt.z_dims = {2};
  opt.h_dims = {8, 16};
  opt.steps = 3;
  opt.warmup = 1;
  opt.batch_size = 16;
  TrainTrace trace;
  const auto rows = cli::run_bench(opt, &trace);
  EXPECT_EQ(rows.size(), 4u);
  for (const auto& row : rows) {
    EXPECT_EQ(row.steps, 3);
    EXPECT_GE(row.mean_ms, 0.0);
  }
  EXPECT_EQ(trace.events, (std::vector<std::string>{"zero_grad", "eval", "backward", "step"}));
  const auto csv = oracle::temp_path("cli_bench.csv").string();
  const Outcome r = invoke({"bench", "--z-dim", "2", "--h-dim", "8", "--steps", "2", "--warmup", "0",
                            "--batch-size", "8", "--metrics-out", csv});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(column(csv, 2), (std::vector<std::string>{"analytical", "monte_carlo"}));
}
