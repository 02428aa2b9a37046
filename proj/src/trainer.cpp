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
#include "bandflow/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "bandflow/flow.hpp"
#include "json.hpp"

namespace bandflow {

namespace {

// Purposes for mix_seed(seed, step, item, purpose).
constexpr uint64_t kDrawSegment = 0;
constexpr uint64_t kDrawTime = 1;
constexpr uint64_t kDrawNoise = 2;
constexpr uint64_t kDrawDropout = 3;
constexpr uint64_t kDrawCrop = 4;
constexpr uint64_t kDrawRate = 5;

int rate_index(const RateDistribution& dist, int rate) {
  for (size_t i = 0; i < dist.rates.size(); ++i) {
    if (dist.rates[i] == rate) return static_cast<int>(i);
  }
  throw std::invalid_argument("rate_index: rate not in distribution");
}

}  // namespace

TrainConfig TrainConfig::toy() {
  TrainConfig cfg;
  cfg.lr_peak = 2.0e-3;
  cfg.warmup_steps = 500;
  cfg.total_steps = 2000;
  cfg.batch_size = 4;
  cfg.crop_frames = 32;
  cfg.checkpoint_every = 500;
  return cfg;
}

bool operator==(const TrainConfig& a, const TrainConfig& b) {
  return a.lr_peak == b.lr_peak && a.beta1 == b.beta1 && a.beta2 == b.beta2 &&
         a.adam_eps == b.adam_eps && a.weight_decay == b.weight_decay &&
         a.clip_norm == b.clip_norm && a.warmup_steps == b.warmup_steps &&
         a.total_steps == b.total_steps && a.cond_dropout == b.cond_dropout &&
         a.alpha == b.alpha && a.sigma_min == b.sigma_min &&
         a.seed == b.seed && a.batch_size == b.batch_size &&
         a.crop_frames == b.crop_frames &&
         a.checkpoint_every == b.checkpoint_every;
}

std::string train_config_to_json(const TrainConfig& cfg) {
  nlohmann::json j;
  j["lr_peak"] = cfg.lr_peak;
  j["beta1"] = cfg.beta1;
  j["beta2"] = cfg.beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["weight_decay"] = cfg.weight_decay;
  j["clip_norm"] = cfg.clip_norm;
  j["warmup_steps"] = cfg.warmup_steps;
  j["total_steps"] = cfg.total_steps;
  j["cond_dropout"] = cfg.cond_dropout;
  j["alpha"] = cfg.alpha;
  j["sigma_min"] = cfg.sigma_min;
  j["seed"] = cfg.seed;
  j["batch_size"] = cfg.batch_size;
  j["crop_frames"] = cfg.crop_frames;
  j["checkpoint_every"] = cfg.checkpoint_every;
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: invalid JSON: ") + e.what());
  }
  TrainConfig cfg;
  try {
    cfg.lr_peak = j.value("lr_peak", cfg.lr_peak);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.clip_norm = j.value("clip_norm", cfg.clip_norm);
    cfg.warmup_steps = j.value("warmup_steps", cfg.warmup_steps);
    cfg.total_steps = j.value("total_steps", cfg.total_steps);
    cfg.cond_dropout = j.value("cond_dropout", cfg.cond_dropout);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.sigma_min = j.value("sigma_min", cfg.sigma_min);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.crop_frames = j.value("crop_frames", cfg.crop_frames);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("train config: bad field type: ") + e.what());
  }
  if (cfg.cond_dropout < 0.0 || cfg.cond_dropout > 1.0) {
    throw DataError("train config: cond_dropout outside [0, 1]");
  }
  if (cfg.warmup_steps > cfg.total_steps) {
    throw DataError("train config: warmup_steps exceeds total_steps");
  }
  return cfg;
}

double lr_schedule(long step, const TrainConfig& cfg) {
  if (step < 0 || step > cfg.total_steps) {
    throw std::invalid_argument("lr_schedule: step outside [0, total_steps]");
  }
  if (step < cfg.warmup_steps) {
    return cfg.lr_peak * static_cast<double>(step) /
           static_cast<double>(cfg.warmup_steps);
  }
  const long span = cfg.total_steps - cfg.warmup_steps;
  if (span <= 0) return cfg.lr_peak;
  const double progress =
      static_cast<double>(step - cfg.warmup_steps) / static_cast<double>(span);
  return cfg.lr_peak * 0.5 * (1.0 + std::cos(M_PI * progress));
}

Trainer::Trainer(Model& model, PairPool& pool, const TrainConfig& cfg)
    : model_(model), pool_(pool), cfg_(cfg) {
  if (cfg_.batch_size <= 0) throw std::invalid_argument("batch_size <= 0");
  if (cfg_.crop_frames <= 0) throw std::invalid_argument("crop_frames <= 0");
  for (const auto& [name, p] : model_.store().items()) {
    opt_.m.emplace_back(p->value.shape());
    opt_.v.emplace_back(p->value.shape());
    opt_.m.back().fill(0.0);
    opt_.v.back().fill(0.0);
  }
}

void Trainer::set_opt_state(AdamState state) {
  const auto& items = model_.store().items();
  if (state.m.size() != items.size() || state.v.size() != items.size()) {
    throw DataError("optimizer state: moment count mismatch");
  }
  for (size_t i = 0; i < items.size(); ++i) {
    if (!state.m[i].same_shape(items[i].second->value) ||
        !state.v[i].same_shape(items[i].second->value)) {
      throw DataError("optimizer state: moment shape mismatch at " +
                      items[i].first);
    }
  }
  opt_ = std::move(state);
}

StepResult Trainer::train_step(long step) {
  const auto& dist = pool_.distribution();
  const PathConfig path{cfg_.sigma_min};

  StepResult result;
  Var total;
  for (int i = 0; i < cfg_.batch_size; ++i) {
    Rng seg_rng(mix_seed(cfg_.seed, step, i, kDrawSegment));
    Rng rate_rng(mix_seed(cfg_.seed, step, i, kDrawRate));
    Rng crop_rng(mix_seed(cfg_.seed, step, i, kDrawCrop));
    Rng time_rng(mix_seed(cfg_.seed, step, i, kDrawTime));
    Rng noise_rng(mix_seed(cfg_.seed, step, i, kDrawNoise));
    Rng drop_rng(mix_seed(cfg_.seed, step, i, kDrawDropout));

    const auto seg = static_cast<size_t>(seg_rng.below(pool_.size()));
    const auto [rate, cutoff] = sample_input_rate(rate_rng, dist);
    const int rate_idx = rate_index(dist, rate);
    const TrainingPair& full = pool_.get(seg, rate_idx);

    const int total_frames = full.x_l.shape()[1];
    if (cfg_.crop_frames > total_frames) {
      throw DataError("train_step: crop_frames exceeds segment frames");
    }
    const int t0 = static_cast<int>(
        crop_rng.below(static_cast<uint64_t>(total_frames - cfg_.crop_frames) +
                       1));
    TrainingPair pair = crop_pair(full, t0, cfg_.crop_frames);

    const double t = time_rng.uniform();
    Tensor x0 = Tensor::randn(pair.x_h_target.shape(), noise_rng, 1.0);
    Tensor x_t = sample_path(pair.x_h_target, x0, t, path);
    Tensor u = target_field(pair.x_h_target, x0, path);

    Var cond;
    if (drop_rng.uniform() < cfg_.cond_dropout) {
      cond = model_.assemble_condition(
          model_.null_condition(cfg_.crop_frames));
      ++result.null_cond_items;
    } else {
      Var c_lf = model_.feature_encode(constant(pair.x_l), rate_idx);
      cond = model_.assemble_condition(c_lf);
    }
    Var v = model_.vfe_forward(t, constant(std::move(x_t)), cond, rate_idx);
    Var item_loss = mse_to(v, u);
    total = total ? add(total, item_loss) : item_loss;
  }
  Var loss = scale(total, 1.0 / cfg_.batch_size);
  result.loss = loss->value.data()[0];
  if (!std::isfinite(result.loss)) {
    throw NumericError("train_step " + std::to_string(step) +
                       ": non-finite loss");
  }

  model_.store().zero_grad();
  backward(loss);

  const auto& items = model_.store().items();
  double sq_norm = 0.0;
  for (const auto& [name, p] : items) {
    if (!p->has_grad()) continue;
    const double* g = p->grad.data();
    for (size_t k = 0; k < p->grad.numel(); ++k) sq_norm += g[k] * g[k];
  }
  result.grad_norm = std::sqrt(sq_norm);
  if (!std::isfinite(result.grad_norm)) {
    throw NumericError("train_step " + std::to_string(step) +
                       ": non-finite gradient norm");
  }
  double grad_scale = 1.0;
  if (cfg_.clip_norm > 0.0 && result.grad_norm > cfg_.clip_norm) {
    grad_scale = cfg_.clip_norm / result.grad_norm;
  }

  const double lr = lr_schedule(step, cfg_);
  opt_.t += 1;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(opt_.t));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(opt_.t));
  for (size_t pi = 0; pi < items.size(); ++pi) {
    auto& p = items[pi].second;
    double* w = p->value.data();
    double* m = opt_.m[pi].data();
    double* v = opt_.v[pi].data();
    const bool has_grad = p->has_grad();
    const double* g = has_grad ? p->grad.data() : nullptr;
    for (size_t k = 0; k < p->value.numel(); ++k) {
      const double gk = has_grad ? g[k] * grad_scale : 0.0;
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gk;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gk * gk;
      const double update = (m[k] / bc1) / (std::sqrt(v[k] / bc2) +
                                            cfg_.adam_eps) +
                            cfg_.weight_decay * w[k];
      w[k] -= lr * update;
    }
    if (!p->value.is_finite()) {
      throw NumericError("train_step " + std::to_string(step) +
                         ": non-finite parameter after update: " +
                         items[pi].first);
    }
  }
  return result;
}

double run_training(Model& model, PairPool& pool, const TrainConfig& cfg,
                    const std::string& out_dir, long start_step,
                    const AdamState* opt_in) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string metrics_path = out_dir + "/metrics.csv";
  const std::string ckpt_path = out_dir + "/checkpoint.bf";

  const bool fresh = !fs::exists(metrics_path) || start_step == 0;
  std::ofstream metrics(metrics_path,
                        fresh ? std::ios::trunc : std::ios::app);
  if (!metrics) throw DataError("cannot open " + metrics_path);
  if (fresh) metrics << "step,loss,lr,wallclock\n";

  Trainer trainer(model, pool, cfg);
  if (opt_in) trainer.set_opt_state(*opt_in);

  const auto t0 = std::chrono::steady_clock::now();
  const double ema_alpha = 2.0 / (100.0 + 1.0);
  double ema = 0.0;
  bool ema_init = false;
  for (long step = start_step; step < cfg.total_steps; ++step) {
    const StepResult r = trainer.train_step(step);
    ema = ema_init ? (1.0 - ema_alpha) * ema + ema_alpha * r.loss : r.loss;
    ema_init = true;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    char row[160];
    std::snprintf(row, sizeof(row), "%ld,%.17g,%.17g,%.3f\n", step, r.loss,
                  lr_schedule(step, cfg), wall);
    metrics << row;
    metrics.flush();
    const long done = step + 1;
    if (done % cfg.checkpoint_every == 0 || done == cfg.total_steps) {
      save_checkpoint(ckpt_path, model, done, &trainer.opt_state());
    }
  }
  return ema;
}

}  // namespace bandflow
