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
#ifndef BANDFLOW_METRICS_HPP_
#define BANDFLOW_METRICS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bandflow/data.hpp"
#include "bandflow/model.hpp"

namespace bandflow {

/// Nearest STFT bin of a frequency at the given rate (bin width
/// rate / n_fft).
int freq_to_bin(double freq_hz, int sample_rate);

/// Log-spectral distance over bins [bin_from, F): mean over frames of
/// sqrt(mean over bins of (log10 P_ref - log10 P_est)^2), P = |X|^2
/// floored at 1e-10.
double lsd_banded(const Waveform& ref, const Waveform& est, int bin_from);

/// Full-band LSD.
double lsd(const Waveform& ref, const Waveform& est);

/// LSD restricted to bins at or above cutoff_hz.
double lsd_hf(const Waveform& ref, const Waveform& est, double cutoff_hz);

enum class EvalMode {
  kModel,     // super_resolve with the provided parameters
  kBaseline,  // sinc upsampling only
  kSelf,      // est = ref; pipeline sanity value of 0
};

struct EvalOptions {
  std::vector<int> rates{8000, 12000, 16000, 24000};
  EvalMode mode = EvalMode::kModel;
  double omega = 1.5;
  int steps = 4;
  uint64_t seed = 0;
};

struct EvalRow {
  std::string item;
  std::string domain;
  int input_rate = 0;
  double lsd_hf = 0.0;
  double lsd_full = 0.0;
  double runtime_ms = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::map<std::string, double> domain_mean_lsd_hf;
  EvalOptions opts;
};

/// Runs one row per manifest item per requested rate. Each reference is
/// brought to 48 kHz, band-limited with make_lr, reconstructed per the
/// mode, and scored against the reference.
EvalReport evaluate_manifest(const std::vector<ManifestEntry>& entries,
                             const Model* model, const EvalOptions& opts);

void write_report_csv(const std::string& path, const EvalReport& report);
void write_report_json(const std::string& path, const EvalReport& report);

}  // namespace bandflow

#endif  // BANDFLOW_METRICS_HPP_
