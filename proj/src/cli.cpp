/**
 * Copyright 2026 The bandflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "bandflow/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "bandflow/image.hpp"
#include "bandflow/inference.hpp"
#include "bandflow/metrics.hpp"
#include "bandflow/wav.hpp"
#include "json.hpp"

namespace bandflow {

namespace {

std::vector<Waveform> load_segments(const std::string& manifest_path) {
  std::vector<Waveform> segments;
  for (const auto& entry : read_manifest(manifest_path)) {
    Waveform hr = prepare_hr(read_wav(entry.path));
    for (auto& seg : segment_hr(hr)) segments.push_back(std::move(seg));
  }
  if (segments.empty()) {
    throw DataError("no usable training segments in " + manifest_path);
  }
  return segments;
}

int cmd_train(const std::string& config_path, bool toy, long steps_override,
              long seed_override, int batch_override,
              const std::string& data_manifest, const std::string& out_dir,
              const std::string& resume_path) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = load_run_config(config_path);
  } else if (toy) {
    cfg.model = VfeConfig::tiny();
    cfg.train = TrainConfig::toy();
  } else {
    throw UsageError("train needs a config file or --toy");
  }
  if (steps_override >= 0) {
    cfg.train.total_steps = steps_override;
    cfg.train.warmup_steps =
        std::min(cfg.train.warmup_steps, cfg.train.total_steps);
  }
  if (seed_override >= 0) cfg.train.seed = static_cast<uint64_t>(seed_override);
  if (batch_override > 0) cfg.train.batch_size = batch_override;
  if (data_manifest.empty()) throw UsageError("train needs --data MANIFEST");

  PairPool pool(load_segments(data_manifest), RateDistribution{});

  std::unique_ptr<Model> model;
  long start_step = 0;
  const AdamState* opt_in = nullptr;
  CheckpointData ckpt;
  if (!resume_path.empty()) {
    ckpt = load_checkpoint(resume_path);
    model = model_from_checkpoint(ckpt);
    start_step = ckpt.step;
    if (ckpt.has_opt) opt_in = &ckpt.opt;
    std::printf("resuming at step %ld from %s\n", start_step,
                resume_path.c_str());
  } else {
    model = std::make_unique<Model>(cfg.model, cfg.train.seed);
  }
  std::printf("training: params=%ld steps=%ld batch=%d seed=%llu\n",
              model->count_total(), cfg.train.total_steps,
              cfg.train.batch_size,
              static_cast<unsigned long long>(cfg.train.seed));
  const double ema = run_training(*model, pool, cfg.train, out_dir,
                                  start_step, opt_in);
  std::printf("done: smoothed loss %.6f; checkpoint at %s/checkpoint.bf\n",
              ema, out_dir.c_str());
  return 0;
}

int cmd_upsample(const std::string& input_path, const std::string& output_path,
                 const std::string& ckpt_path, double omega, int steps,
                 long seed_flag, bool limiter,
                 const std::string& spectrogram_path) {
  UpsampleOptions opts;
  opts.omega = omega;
  opts.steps = steps;
  opts.limiter = limiter;
  if (seed_flag >= 0) {
    opts.seed = static_cast<uint64_t>(seed_flag);
  } else {
    std::random_device rd;
    opts.seed = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  }
  std::printf("upsample: omega=%g steps=%d seed=%llu\n", opts.omega,
              opts.steps, static_cast<unsigned long long>(opts.seed));

  const CheckpointData ckpt = load_checkpoint(ckpt_path);
  const std::unique_ptr<Model> model = model_from_checkpoint(ckpt);
  const Waveform in = read_wav(input_path);
  std::printf("input: %zu samples @ %d Hz -> model rate %d Hz\n",
              in.samples.size(), in.sample_rate,
              nearest_supported_rate(in.sample_rate));

  const Waveform out = super_resolve(in, *model, opts);
  write_wav(output_path, out, WavFormat::kFloat32);
  std::printf("wrote %zu samples @ %d Hz to %s\n", out.samples.size(),
              out.sample_rate, output_path.c_str());
  if (!spectrogram_path.empty()) {
    emit_spectrogram_image(stft(out), spectrogram_path);
    std::printf("wrote spectrogram to %s\n", spectrogram_path.c_str());
  }
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& out_prefix,
             const std::vector<int>& rates, const std::string& ckpt_path,
             bool baseline, bool self_mode, double omega, int steps,
             long seed_flag) {
  EvalOptions opts;
  if (!rates.empty()) opts.rates = rates;
  opts.omega = omega;
  opts.steps = steps;
  if (seed_flag >= 0) opts.seed = static_cast<uint64_t>(seed_flag);

  std::unique_ptr<Model> model;
  if (self_mode) {
    opts.mode = EvalMode::kSelf;
  } else if (baseline || ckpt_path.empty()) {
    opts.mode = EvalMode::kBaseline;
  } else {
    opts.mode = EvalMode::kModel;
    model = model_from_checkpoint(load_checkpoint(ckpt_path));
  }

  const auto entries = read_manifest(manifest_path);
  const EvalReport report = evaluate_manifest(entries, model.get(), opts);
  write_report_csv(out_prefix + ".csv", report);
  write_report_json(out_prefix + ".json", report);
  std::printf("evaluated %zu rows -> %s.csv / %s.json\n", report.rows.size(),
              out_prefix.c_str(), out_prefix.c_str());
  for (const auto& [domain, mean] : report.domain_mean_lsd_hf) {
    std::printf("  %s: mean lsd_hf %.4f\n", domain.c_str(), mean);
  }
  return 0;
}

int cmd_inspect_config(const std::string& config_path, bool toy) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = load_run_config(config_path);
  } else if (toy) {
    cfg.model = VfeConfig::tiny();
    cfg.train = TrainConfig::toy();
  }
  std::printf("%s\n", run_config_to_json(cfg).c_str());
  return 0;
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  if (j.contains("model")) cfg.model = config_from_json(j["model"].dump());
  if (j.contains("train")) {
    cfg.train = train_config_from_json(j["train"].dump());
  }
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(config_to_json(cfg.model));
  j["train"] = nlohmann::json::parse(train_config_to_json(cfg.train));
  return j.dump(2);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return run_config_from_json(ss.str());
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"bandflow: flow-matching audio super-resolution to 48 kHz"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Optimize a model on a corpus");
  std::string train_config, train_data, train_out = "run", train_resume;
  bool train_toy = false;
  long train_steps = -1, train_seed = -1;
  int train_batch = -1;
  train->add_option("config", train_config, "Run config JSON")
      ->check(CLI::ExistingFile);
  train->add_flag("--toy", train_toy, "Tiny architecture and short schedule");
  train->add_option("--steps", train_steps, "Override total_steps");
  train->add_option("--seed", train_seed, "Override RNG seed");
  train->add_option("--batch", train_batch, "Override batch size");
  train->add_option("--data", train_data, "Training manifest (TSV)");
  train->add_option("--out", train_out, "Output directory");
  train->add_option("--resume", train_resume, "Checkpoint to continue from")
      ->check(CLI::ExistingFile);

  // upsample
  auto* up = app.add_subcommand("upsample", "Reconstruct 48 kHz audio");
  std::string up_in, up_out, up_ckpt, up_pgm;
  double up_omega = 1.5;
  int up_steps = 4;
  long up_seed = -1;
  bool up_limiter = false;
  up->add_option("input", up_in, "Band-limited input WAV")
      ->required()
      ->check(CLI::ExistingFile);
  up->add_option("output", up_out, "48 kHz output WAV")->required();
  up->add_option("--checkpoint", up_ckpt, "Trained model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  up->add_option("--omega", up_omega, "Guidance scale");
  up->add_option("--steps", up_steps, "ODE solver steps");
  up->add_option("--seed", up_seed, "Noise seed (default: entropy, logged)");
  up->add_flag("--limiter", up_limiter, "Limit output peak to -1 dBFS");
  up->add_option("--spectrogram", up_pgm, "Also write an output PGM");

  // eval
  auto* ev = app.add_subcommand("eval", "Score a manifest with LSD metrics");
  std::string ev_manifest, ev_out = "report", ev_ckpt;
  std::vector<int> ev_rates;
  bool ev_baseline = false, ev_self = false;
  double ev_omega = 1.5;
  int ev_steps = 4;
  long ev_seed = 0;
  ev->add_option("manifest", ev_manifest, "Evaluation manifest (TSV)")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Report path prefix");
  ev->add_option("--rates", ev_rates, "Input rates to evaluate")
      ->delimiter(',');
  ev->add_option("--checkpoint", ev_ckpt, "Model checkpoint")
      ->check(CLI::ExistingFile);
  ev->add_flag("--baseline", ev_baseline, "Sinc-upsample baseline only");
  ev->add_flag("--self", ev_self, "Score references against themselves");
  ev->add_option("--omega", ev_omega, "Guidance scale");
  ev->add_option("--steps", ev_steps, "ODE solver steps");
  ev->add_option("--seed", ev_seed, "Noise seed");

  // inspect-config
  auto* ins = app.add_subcommand("inspect-config",
                                 "Print the effective config with defaults");
  std::string ins_config;
  bool ins_toy = false;
  ins->add_option("config", ins_config, "Run config JSON")
      ->check(CLI::ExistingFile);
  ins->add_flag("--toy", ins_toy, "Tiny architecture defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      return cmd_train(train_config, train_toy, train_steps, train_seed,
                       train_batch, train_data, train_out, train_resume);
    }
    if (*up) {
      return cmd_upsample(up_in, up_out, up_ckpt, up_omega, up_steps, up_seed,
                          up_limiter, up_pgm);
    }
    if (*ev) {
      return cmd_eval(ev_manifest, ev_out, ev_rates, ev_ckpt, ev_baseline,
                      ev_self, ev_omega, ev_steps, ev_seed);
    }
    if (*ins) {
      return cmd_inspect_config(ins_config, ins_toy);
    }
    throw UsageError("no command selected");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n%s\n", e.what(),
                 app.help().c_str());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return 3;
  }
}

}  // namespace bandflow
