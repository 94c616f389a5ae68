// Copyright 2026 The dgmkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dgm/data.hpp"
#include "dgm/zoo.hpp"

namespace dgm::cli {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::unique_ptr<MetricsWriter> metrics(const std::string& path) {
  return path.empty() ? nullptr : std::make_unique<MetricsWriter>(path);
}

Tensor normal_column(Index n, double loc, double scale, Rng& rng) {
  return standard_normal({n, 1}, rng) * scale + loc;
}

std::string line(const std::string& s) { return s + "\n"; }

}  // namespace

std::string kl_mode_name(KlMode mode) { return mode == KlMode::analytical ? "analytical" : "monte_carlo"; }

// ---------------------------------------------------------------------------

VaeTrainReport train_vae(const VaeTrainOptions& opt, std::ostream& log) {
  const Dataset ds = opt.data == "synthetic" ? synth_data(opt.num_examples, opt.side, opt.seed) : load_idx(opt.data);
  VaeConfig cfg;
  cfg.x_dim = ds.features();
  cfg.z_dim = opt.z_dim;
  cfg.h_dim = opt.h_dim;
  cfg.seed = opt.seed;
  const Vae vae = build_vae(cfg);
  Model model = vae_model(vae.store, vae.q, vae.p, vae.prior, OptimizerConfig::adam(opt.lr), opt.kl_mode);

  Rng root(opt.seed);
  Rng shuffle = root.split();
  Rng rng = root.split();
  auto writer = metrics(opt.metrics_out);
  VaeTrainReport report;
  long step = 0;
  for (long epoch = 1; epoch <= opt.epochs; ++epoch) {
    double total = 0.0;
    const auto batches = minibatches(ds.size(), opt.batch_size, shuffle);
    for (const auto& rows : batches) {
      const SampleMap batch{{"x", gather_rows(ds.examples, rows)}};
      const auto start = Clock::now();
      const double loss = model.train(batch, rng);
      const double ms = elapsed_ms(start);
      ++step;
      total += loss;
      report.losses.push_back(loss);
      if (writer) writer->row(epoch, step, loss, ms);
    }
    report.epoch_means.push_back(total / static_cast<double>(batches.size()));
    log << "epoch " << epoch << " mean_loss " << format_double(report.epoch_means.back()) << "\n";
  }
  if (!opt.params_out.empty()) write_parameters(*vae.store, opt.params_out);
  return report;
}

GanTrainReport train_gan(const GanTrainOptions& opt, std::ostream& log) {
  constexpr double kDataLoc = 2.0, kDataScale = 0.5;
  GanConfig cfg;
  cfg.seed = opt.seed;
  if (opt.freeze_generator) {
    cfg.gen_scale = kDataScale;
    cfg.gen_shift = kDataLoc;
  }
  const Gan gan = build_gan(cfg);
  const double lr_g = opt.freeze_generator ? 0.0 : opt.lr_g.value_or(opt.lr);
  Model model = gan_model(gan.store, gan.generator, "x", gan.discriminator, OptimizerConfig::adam(lr_g),
                          OptimizerConfig::adam(opt.lr));

  Rng root(opt.seed);
  Rng data_rng = root.split();
  Rng held_rng = root.split();
  Rng rng = root.split();
  auto writer = metrics(opt.metrics_out);
  GanTrainReport report;
  for (long step = 1; step <= opt.steps; ++step) {
    const SampleMap batch{{"x", normal_column(opt.batch_size, kDataLoc, kDataScale, data_rng)}};
    const auto start = Clock::now();
    const double loss = model.train(batch, rng);
    const double ms = elapsed_ms(start);
    report.disc_losses.push_back(loss);
    if (writer) writer->row(1, step, loss, ms);
  }

  const Tensor held = normal_column(1000, kDataLoc, kDataScale, held_rng);
  Session session(held_rng, false);
  report.disc_mean_real = mean(sigmoid(gan.discriminator->logits({{"x", held}}, 1000, session))).item();
  report.gen_scale = gan.store->value("gen.scale").item();
  report.gen_shift = gan.store->value("gen.shift").item();
  log << "disc_loss " << format_double(report.disc_losses.empty() ? 0.0 : report.disc_losses.back()) << "\n";
  log << "disc_mean_real " << format_double(report.disc_mean_real) << "\n";
  log << "generator scale " << format_double(report.gen_scale) << " shift " << format_double(report.gen_shift)
      << "\n";
  if (!opt.params_out.empty()) write_parameters(*gan.store, opt.params_out);
  return report;
}

FlowTrainReport train_flow(const FlowTrainOptions& opt, std::ostream& log) {
  Rng root(opt.seed);
  Rng data_rng = root.split();
  Rng shuffle = root.split();
  Rng rng = root.split();
  Array xs(opt.num_examples);
  for (Index i = 0; i < opt.num_examples; ++i) {
    const double mode = data_rng.uniform01() <= 0.5 ? -2.0 : 2.0;
    xs[i] = mode + 0.5 * data_rng.standard_normal();
  }
  const Tensor data({opt.num_examples, 1}, xs);

  const FlowModel flow = build_flow(opt.seed);
  Model model(flow.store, mean(-log_prob(flow.dist)), {flow.dist}, OptimizerConfig::adam(opt.lr));
  auto nll = [&] { return model.test({{"x", data}}, rng); };

  auto writer = metrics(opt.metrics_out);
  FlowTrainReport report;
  report.initial_nll = nll();
  long step = 0;
  for (long epoch = 1; step < opt.steps; ++epoch) {
    for (const auto& rows : minibatches(opt.num_examples, opt.batch_size, shuffle)) {
      if (step >= opt.steps) break;
      const SampleMap batch{{"x", gather_rows(data, rows)}};
      const auto start = Clock::now();
      const double loss = model.train(batch, rng);
      const double ms = elapsed_ms(start);
      ++step;
      report.losses.push_back(loss);
      if (writer) writer->row(epoch, step, loss, ms);
    }
  }
  report.final_nll = nll();
  log << "initial_nll " << format_double(report.initial_nll) << "\n";
  log << "final_nll " << format_double(report.final_nll) << "\n";
  if (!opt.params_out.empty()) write_parameters(*flow.store, opt.params_out);
  return report;
}

// ---------------------------------------------------------------------------

std::vector<BenchRow> run_bench(const BenchOptions& opt, TrainTrace* trace) {
#if defined(__GLIBC__)
  // Keep large step buffers in the heap instead of mapping and unmapping them every step.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  const Dataset ds = synth_data(4 * opt.batch_size, 8, opt.seed);
  std::vector<SampleMap> batches;
  {
    Rng shuffle(opt.seed);
    for (const auto& rows : minibatches(ds.size(), opt.batch_size, shuffle)) {
      batches.push_back({{"x", gather_rows(ds.examples, rows)}});
    }
  }
  std::vector<BenchRow> rows;
  bool traced = false;
  for (Index z : opt.z_dims) {
    for (Index h : opt.h_dims) {
      VaeConfig cfg;
      cfg.x_dim = ds.features();
      cfg.z_dim = z;
      cfg.h_dim = h;
      cfg.seed = opt.seed;
      const KlMode modes[2] = {KlMode::analytical, KlMode::monte_carlo};
      std::vector<Vae> vaes;
      std::vector<Model> models;
      std::vector<Rng> rngs;
      for (KlMode m : modes) {
        vaes.push_back(build_vae(cfg));
        const Vae& v = vaes.back();
        models.push_back(vae_model(v.store, v.q, v.p, v.prior, OptimizerConfig::adam(opt.lr), m));
        rngs.emplace_back(opt.seed);
      }
      std::vector<double> times[2];
      for (long s = 0; s < opt.warmup + opt.steps; ++s) {
        const SampleMap& batch = batches[static_cast<std::size_t>(s) % batches.size()];
        const bool timed = s >= opt.warmup;
        for (int k = 0; k < 2; ++k) {
          const int m = (s % 2 == 0) ? k : 1 - k;
          const bool record = timed && trace && !traced;
          if (record) models[m].set_trace(trace);
          const auto start = Clock::now();
          models[m].train(batch, rngs[m]);
          const double ms = elapsed_ms(start);
          if (record) {
            models[m].set_trace(nullptr);
            traced = true;
          }
          if (timed) times[m].push_back(ms);
        }
      }
      for (int m = 0; m < 2; ++m) {
        const auto& t = times[m];
        double mu = 0.0, var = 0.0;
        for (double v : t) mu += v;
        mu /= static_cast<double>(t.size());
        for (double v : t) var += (v - mu) * (v - mu);
        const double sd = t.size() > 1 ? std::sqrt(var / static_cast<double>(t.size() - 1)) : 0.0;
        rows.push_back({z, h, modes[m], mu, sd, opt.steps});
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::string describe(const std::string& model) {
  std::ostringstream out;
  if (model == "vae") {
    VaeConfig cfg;
    const Vae v = build_vae(cfg);
    const LossExpr analytical = vae_loss(v.q, v.p, v.prior, KlMode::analytical);
    const LossExpr mc = vae_loss(v.q, v.p, v.prior, KlMode::monte_carlo);
    out << "# distributions\n"
        << line(v.q->text()) << line(v.p->text()) << line(v.prior->text()) << line(v.joint->text());
    out << "# loss analytical\n" << line(analytical.text());
    out << "# loss monte_carlo\n" << line(mc.text());
    out << "# latex distributions\n"
        << line(v.q->latex()) << line(v.p->latex()) << line(v.prior->latex()) << line(v.joint->latex());
    out << "# latex loss analytical\n" << line(analytical.latex());
    out << "# latex loss monte_carlo\n" << line(mc.latex());
  } else if (model == "gan") {
    const Gan g = build_gan(GanConfig{});
    auto [gen_loss, disc_loss] = adversarial_pair("x", g.generator, g.discriminator);
    out << "# distributions\n"
        << line(g.generator->text() + " = affine(" + g.generator->base()->text() + ")")
        << line(g.discriminator->text());
    out << "# loss discriminator\n" << line(disc_loss.text());
    out << "# loss generator\n" << line(gen_loss.text());
    out << "# latex loss discriminator\n" << line(disc_loss.latex());
    out << "# latex loss generator\n" << line(gen_loss.latex());
  } else if (model == "flow") {
    const FlowModel f = build_flow(0);
    const LossExpr loss = mean(-log_prob(f.dist));
    std::string layers;
    for (const auto& l : f.dist->flows()) layers += (layers.empty() ? "" : ", ") + l->name();
    out << "# distributions\n" << line(f.dist->text() + " = flow[" + layers + "](" + f.dist->base()->text() + ")");
    out << "# loss\n" << line(loss.text());
    out << "# latex loss\n" << line(loss.latex());
  } else if (model == "composite-demo") {
    const Composite c = build_composite(VaeConfig{});
    out << "# distributions\n"
        << line(c.classifier->text()) << line(c.vae.q->text()) << line(c.vae.p->text())
        << line(c.vae.prior->text()) << line(c.vae.joint->text());
    out << "# loss\n" << line(c.loss.text());
    out << "# latex loss\n" << line(c.loss.latex());
  } else {
    throw ConfigError("unknown model '" + model + "'");
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep generative model toolkit demos"};
  app.require_subcommand(1);

  const std::vector<std::string> kl_modes{"analytical", "monte_carlo"};
  std::string kl_mode = "analytical";

  VaeTrainOptions vae;
  auto* vae_cmd = app.add_subcommand("vae-train", "Train a VAE and write metrics");
  vae_cmd->add_option("--data", vae.data, "IDX image file or 'synthetic'");
  vae_cmd->add_option("--num-examples", vae.num_examples, "Synthetic dataset size")->check(CLI::PositiveNumber);
  vae_cmd->add_option("--z-dim", vae.z_dim)->check(CLI::PositiveNumber);
  vae_cmd->add_option("--h-dim", vae.h_dim)->check(CLI::PositiveNumber);
  vae_cmd->add_option("--batch-size", vae.batch_size)->check(CLI::PositiveNumber);
  vae_cmd->add_option("--epochs", vae.epochs)->check(CLI::PositiveNumber);
  vae_cmd->add_option("--kl-mode", kl_mode)->check(CLI::IsMember(kl_modes));
  vae_cmd->add_option("--lr", vae.lr)->check(CLI::NonNegativeNumber);
  vae_cmd->add_option("--seed", vae.seed);
  vae_cmd->add_option("--metrics-out", vae.metrics_out);
  vae_cmd->add_option("--params-out", vae.params_out);

  GanTrainOptions gan;
  std::string gan_data = "synthetic";
  double lr_g = -1.0;
  auto* gan_cmd = app.add_subcommand("gan-train", "Train a 1-D GAN on N(2, 0.5^2) data");
  gan_cmd->add_option("--data", gan_data)->check(CLI::IsMember({"synthetic"}));
  gan_cmd->add_option("--steps", gan.steps)->check(CLI::PositiveNumber);
  gan_cmd->add_option("--batch-size", gan.batch_size)->check(CLI::PositiveNumber);
  gan_cmd->add_option("--lr", gan.lr, "Discriminator learning rate")->check(CLI::NonNegativeNumber);
  gan_cmd->add_option("--lr-g", lr_g, "Generator learning rate (default: --lr)")->check(CLI::NonNegativeNumber);
  gan_cmd->add_flag("--freeze-generator", gan.freeze_generator, "Pin the generator at the data distribution");
  gan_cmd->add_option("--seed", gan.seed);
  gan_cmd->add_option("--metrics-out", gan.metrics_out);
  gan_cmd->add_option("--params-out", gan.params_out);

  FlowTrainOptions flow;
  std::string flow_data = "synthetic";
  auto* flow_cmd = app.add_subcommand("flow-train", "Fit an affine/planar flow to 1-D two-mode data");
  flow_cmd->add_option("--data", flow_data)->check(CLI::IsMember({"synthetic"}));
  flow_cmd->add_option("--steps", flow.steps)->check(CLI::PositiveNumber);
  flow_cmd->add_option("--num-examples", flow.num_examples)->check(CLI::PositiveNumber);
  flow_cmd->add_option("--batch-size", flow.batch_size)->check(CLI::PositiveNumber);
  flow_cmd->add_option("--lr", flow.lr)->check(CLI::NonNegativeNumber);
  flow_cmd->add_option("--seed", flow.seed);
  flow_cmd->add_option("--metrics-out", flow.metrics_out);
  flow_cmd->add_option("--params-out", flow.params_out);

  BenchOptions bench;
  std::string bench_data = "synthetic";
  auto* bench_cmd = app.add_subcommand("bench", "Per-step time of analytical vs Monte-Carlo KL");
  bench_cmd->add_option("--data", bench_data)->check(CLI::IsMember({"synthetic"}));
  bench_cmd->add_option("--z-dim", bench.z_dims)->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--h-dim", bench.h_dims)->delimiter(',')->check(CLI::PositiveNumber);
  bench_cmd->add_option("--steps", bench.steps)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--warmup", bench.warmup)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--batch-size", bench.batch_size)->check(CLI::PositiveNumber);
  bench_cmd->add_option("--lr", bench.lr)->check(CLI::NonNegativeNumber);
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--metrics-out", bench.metrics_out);

  std::string model_name;
  auto* describe_cmd = app.add_subcommand("describe", "Print distributions and losses as text and LaTeX");
  describe_cmd->add_option("--model", model_name)
      ->required()
      ->check(CLI::IsMember({"vae", "gan", "flow", "composite-demo"}));

  std::vector<const char*> argv{"dgm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (vae_cmd->parsed()) {
      vae.kl_mode = kl_mode == "analytical" ? KlMode::analytical : KlMode::monte_carlo;
      train_vae(vae, out);
    } else if (gan_cmd->parsed()) {
      if (lr_g >= 0.0) gan.lr_g = lr_g;
      train_gan(gan, out);
    } else if (flow_cmd->parsed()) {
      train_flow(flow, out);
    } else if (bench_cmd->parsed()) {
      const auto rows = run_bench(bench);
      std::unique_ptr<std::ofstream> csv;
      if (!bench.metrics_out.empty()) {
        csv = std::make_unique<std::ofstream>(bench.metrics_out, std::ios::trunc);
        if (!*csv) throw Error(bench.metrics_out + ": cannot open for writing");
        *csv << "z_dim,h_dim,kl_mode,mean_ms,std_ms,steps\n";
      }
      char buf[160];
      std::snprintf(buf, sizeof buf, "%6s %6s %-12s %12s %12s\n", "z_dim", "h_dim", "kl_mode", "mean_ms", "std_ms");
      out << buf;
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%6ld %6ld %-12s %12.4f %12.4f\n", static_cast<long>(r.z_dim),
                      static_cast<long>(r.h_dim), kl_mode_name(r.kl_mode).c_str(), r.mean_ms, r.std_ms);
        out << buf;
        if (csv) {
          *csv << r.z_dim << ',' << r.h_dim << ',' << kl_mode_name(r.kl_mode) << ',' << format_double(r.mean_ms)
               << ',' << format_double(r.std_ms) << ',' << r.steps << '\n';
        }
      }
    } else if (describe_cmd->parsed()) {
      out << describe(model_name);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dgm::cli
