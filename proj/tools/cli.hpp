// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dgm/model.hpp"

namespace dgm::cli {

struct VaeTrainOptions {
  std::string data = "synthetic";
  Index num_examples = 1024;
  Index side = 8;
  Index z_dim = 2;
  Index h_dim = 32;
  Index batch_size = 128;
  long epochs = 10;
  KlMode kl_mode = KlMode::analytical;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string metrics_out;
  std::string params_out;
};

struct VaeTrainReport {
  std::vector<double> losses;
  std::vector<double> epoch_means;
};

VaeTrainReport train_vae(const VaeTrainOptions& opt, std::ostream& log);

struct GanTrainOptions {
  long steps = 2000;
  Index batch_size = 128;
  double lr = 1e-3;
  std::optional<double> lr_g;
  /// Generator pinned at the data distribution with a zero learning rate.
  bool freeze_generator = false;
  std::uint64_t seed = 0;
  std::string metrics_out;
  std::string params_out;
};

struct GanTrainReport {
  std::vector<double> disc_losses;
  /// Mean discriminator output on 1000 held-out real samples after training.
  double disc_mean_real = 0.0;
  double gen_scale = 0.0;
  double gen_shift = 0.0;
};

GanTrainReport train_gan(const GanTrainOptions& opt, std::ostream& log);

struct FlowTrainOptions {
  long steps = 1000;
  Index num_examples = 2048;
  Index batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string metrics_out;
  std::string params_out;
};

struct FlowTrainReport {
  std::vector<double> losses;
  /// Mean negative log-likelihood over the whole dataset.
  double initial_nll = 0.0;
  double final_nll = 0.0;
};

FlowTrainReport train_flow(const FlowTrainOptions& opt, std::ostream& log);

struct BenchOptions {
  std::vector<Index> z_dims{10, 30};
  std::vector<Index> h_dims{400, 2000};
  long steps = 500;
  long warmup = 50;
  Index batch_size = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string metrics_out;
};

struct BenchRow {
  Index z_dim;
  Index h_dim;
  KlMode kl_mode;
  double mean_ms;
  double std_ms;
  long steps;
};

/// Per cell, the two modes alternate step by step. Only Model::train is
/// inside the timed region; `trace` receives the events of the first timed step.
std::vector<BenchRow> run_bench(const BenchOptions& opt, TrainTrace* trace = nullptr);

/// Text and LaTeX rendering of a demo model; throws ConfigError on an unknown name.
std::string describe(const std::string& model);

std::string kl_mode_name(KlMode mode);

/// Full command line without the program name. Exit codes: 0 success,
/// 1 data or IO failure, 2 invalid flags.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dgm::cli
