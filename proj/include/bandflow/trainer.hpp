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
#ifndef BANDFLOW_TRAINER_HPP_
#define BANDFLOW_TRAINER_HPP_

#include <cstdint>
#include <string>

#include "bandflow/checkpoint.hpp"
#include "bandflow/data.hpp"
#include "bandflow/model.hpp"

namespace bandflow {

struct TrainConfig {
  double lr_peak = 2.0e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double clip_norm = 1.0;  // <= 0 disables clipping
  long warmup_steps = 10000;
  long total_steps = 500000;
  double cond_dropout = 0.1;
  double alpha = kCompressAlpha;
  double sigma_min = 0.1;
  uint64_t seed = 0;
  int batch_size = 16;
  int crop_frames = kSegmentFrames;
  long checkpoint_every = 1000;

  /// Short overfit runs on the tiny architecture.
  static TrainConfig toy();
};

bool operator==(const TrainConfig& a, const TrainConfig& b);

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& text);

/// Linear warmup to lr_peak, then cosine decay to 0 at total_steps.
double lr_schedule(long step, const TrainConfig& cfg);

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;  // pre-clip global norm
  int null_cond_items = 0;
};

/// Owns the optimizer moments; the model and pair pool are borrowed.
/// Every random draw is keyed by (seed, step, item, purpose), so a resumed
/// run replays the exact sample sequence of an unbroken one.
class Trainer {
 public:
  Trainer(Model& model, PairPool& pool, const TrainConfig& cfg);

  /// One optimization step: batch assembly, CFM loss, backward, clipped
  /// AdamW update at lr_schedule(step).
  StepResult train_step(long step);

  AdamState& opt_state() { return opt_; }
  const AdamState& opt_state() const { return opt_; }
  void set_opt_state(AdamState state);

 private:
  Model& model_;
  PairPool& pool_;
  TrainConfig cfg_;
  AdamState opt_;
};

/// Runs steps [start_step, total_steps), appending {step, loss, lr,
/// wallclock} rows to <out_dir>/metrics.csv and atomically rewriting
/// <out_dir>/checkpoint.bf every checkpoint_every steps and at the end.
/// Returns the exponential moving average of the loss (window 100).
double run_training(Model& model, PairPool& pool, const TrainConfig& cfg,
                    const std::string& out_dir, long start_step = 0,
                    const AdamState* opt_in = nullptr);

}  // namespace bandflow

#endif  // BANDFLOW_TRAINER_HPP_
