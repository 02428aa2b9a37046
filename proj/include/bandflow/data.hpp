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
#ifndef BANDFLOW_DATA_HPP_
#define BANDFLOW_DATA_HPP_

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bandflow/common.hpp"
#include "bandflow/dsp.hpp"
#include "bandflow/rng.hpp"
#include "bandflow/tensor.hpp"

namespace bandflow {

/// 2.72 s at 48 kHz; 255 hops -> 256 center-padded frames.
inline constexpr long kSegmentSamples = 130560;
inline constexpr int kSegmentFrames = 256;
inline constexpr double kSilenceDbfs = -35.0;

struct RateDistribution {
  std::array<int, 4> rates{8000, 12000, 16000, 24000};
  std::array<double, 4> probs{0.7, 0.1, 0.1, 0.1};
  std::array<int, 4> cutoff_bins{80, 128, 170, 256};
};

/// Resamples to 48 kHz and removes frames quieter than -35 dBFS RMS
/// (1024-sample frames, hop 512; kept frame ranges are concatenated).
Waveform prepare_hr(const Waveform& w);

/// Hann low-pass at 0.95x the target Nyquist, then decimation.
Waveform make_lr(const Waveform& hr, int input_rate);

/// Categorical draw over the configured rates; returns (rate, cutoff bins).
std::pair<int, int> sample_input_rate(Rng& rng, const RateDistribution& dist);

struct TrainingPair {
  int lr_input_rate = 0;
  int cutoff_bins = 0;
  Tensor x_l;         // compressed low band [F1, T, 2]
  Tensor x_h_target;  // compressed generation target [F - F1_min, T, 2]
};

/// Builds the conditioning input through the LR chain and the loss target
/// from the clean segment's spectrum.
TrainingPair build_pair(const Waveform& hr_segment, int rate, int cutoff);

/// Copies frame columns [t0, t0+frames) of both grids.
TrainingPair crop_pair(const TrainingPair& pair, int t0, int frames);

/// Rows [from, to) of a [F,T,2] grid.
Tensor slice_bins(const Tensor& grid, int from, int to);

struct ManifestEntry {
  std::string path;
  std::string domain;
  double duration_s = 0.0;
};

/// Newline-delimited tab-separated records {path, domain, duration}.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

/// Cuts a prepared waveform into whole training segments.
std::vector<Waveform> segment_hr(const Waveform& prepared);

/// Lazily built (segment, rate) -> TrainingPair table over a fixed corpus.
class PairPool {
 public:
  PairPool(std::vector<Waveform> segments, RateDistribution dist);
  const TrainingPair& get(size_t segment_idx, int rate_idx);
  size_t size() const { return segments_.size(); }
  const Waveform& segment(size_t idx) const { return segments_[idx]; }
  const RateDistribution& distribution() const { return dist_; }

 private:
  std::vector<Waveform> segments_;
  RateDistribution dist_;
  std::map<std::pair<size_t, int>, TrainingPair> cache_;
};

}  // namespace bandflow

#endif  // BANDFLOW_DATA_HPP_
