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
#include "bandflow/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace bandflow {

namespace {

constexpr int kTrimWin = 1024;
constexpr int kTrimHop = 512;

double frame_dbfs(const std::vector<double>& x, size_t off, size_t n) {
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) acc += x[off + i] * x[off + i];
  const double rms = std::sqrt(acc / static_cast<double>(n));
  if (rms <= 0.0) return -1e30;
  return 20.0 * std::log10(rms);
}

}  // namespace

Waveform prepare_hr(const Waveform& w) {
  if (w.sample_rate <= 0) throw DataError("prepare_hr: invalid sample rate");
  Waveform hr = sinc_resample(w, kFullRate);
  const size_t len = hr.samples.size();

  Waveform out;
  out.sample_rate = kFullRate;
  if (len == 0) return out;

  // Union of sample ranges covered by frames at or above the threshold.
  std::vector<char> keep(len, 0);
  for (size_t off = 0; off < len; off += kTrimHop) {
    const size_t n = std::min<size_t>(kTrimWin, len - off);
    if (frame_dbfs(hr.samples, off, n) >= kSilenceDbfs) {
      std::fill(keep.begin() + off, keep.begin() + off + n, 1);
    }
  }
  out.samples.reserve(len);
  for (size_t i = 0; i < len; ++i) {
    if (keep[i]) out.samples.push_back(hr.samples[i]);
  }
  return out;
}

Waveform make_lr(const Waveform& hr, int input_rate) {
  if (hr.sample_rate != kFullRate) {
    throw DataError("make_lr: expected 48 kHz input");
  }
  if (input_rate <= 0 || input_rate >= kFullRate) {
    throw DataError("make_lr: input rate must lie in (0, 48000)");
  }
  const double cutoff = 0.95 * (input_rate / 2.0);
  Waveform filtered = lowpass_hann(hr, cutoff);
  if (kFullRate % input_rate == 0) {
    // The FIR above is the anti-alias filter; keep every k-th sample.
    const int k = kFullRate / input_rate;
    Waveform out;
    out.sample_rate = input_rate;
    out.samples.reserve(filtered.samples.size() / k + 1);
    for (size_t i = 0; i < filtered.samples.size(); i += k) {
      out.samples.push_back(filtered.samples[i]);
    }
    return out;
  }
  return sinc_resample(filtered, input_rate);
}

std::pair<int, int> sample_input_rate(Rng& rng, const RateDistribution& dist) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (size_t i = 0; i < dist.rates.size(); ++i) {
    acc += dist.probs[i];
    if (u < acc || i + 1 == dist.rates.size()) {
      return {dist.rates[i], dist.cutoff_bins[i]};
    }
  }
  return {dist.rates.back(), dist.cutoff_bins.back()};
}

Tensor slice_bins(const Tensor& grid, int from, int to) {
  const auto& s = grid.shape();
  if (s.size() != 3 || s[2] != 2) {
    throw std::invalid_argument("slice_bins: expected [F, T, 2] grid");
  }
  if (from < 0 || to > s[0] || from >= to) {
    throw std::invalid_argument("slice_bins: bad bin range");
  }
  Tensor out({to - from, s[1], 2});
  const size_t row = static_cast<size_t>(s[1]) * 2;
  std::memcpy(out.data(), grid.data() + static_cast<size_t>(from) * row,
              static_cast<size_t>(to - from) * row * sizeof(double));
  return out;
}

TrainingPair build_pair(const Waveform& hr_segment, int rate, int cutoff) {
  if (hr_segment.sample_rate != kFullRate) {
    throw DataError("build_pair: segment must be 48 kHz");
  }
  if (cutoff_bins_for_rate(rate) != cutoff) {
    throw DataError("build_pair: rate/cutoff pairing mismatch");
  }
  Waveform lr = make_lr(hr_segment, rate);
  Waveform lr_up = sinc_resample(lr, kFullRate);
  if (lr_up.samples.size() != hr_segment.samples.size()) {
    throw DataError("build_pair: round-trip length mismatch");
  }
  ComplexSpectrogram lr_spec = compress(stft(lr_up), kCompressAlpha);
  ComplexSpectrogram hr_spec = compress(stft(hr_segment), kCompressAlpha);

  TrainingPair pair;
  pair.lr_input_rate = rate;
  pair.cutoff_bins = cutoff;
  pair.x_l = slice_bins(lr_spec.coeffs, 0, cutoff);
  pair.x_h_target = slice_bins(hr_spec.coeffs, kMinCutoffBins, kBins);
  return pair;
}

TrainingPair crop_pair(const TrainingPair& pair, int t0, int frames) {
  const int total = pair.x_l.shape()[1];
  if (t0 < 0 || frames <= 0 || t0 + frames > total) {
    throw std::invalid_argument("crop_pair: frame range out of bounds");
  }
  auto crop = [&](const Tensor& grid) {
    const int f = grid.shape()[0];
    const size_t src_row = static_cast<size_t>(total) * 2;
    Tensor out({f, frames, 2});
    for (int i = 0; i < f; ++i) {
      std::memcpy(out.data() + static_cast<size_t>(i) * frames * 2,
                  grid.data() + static_cast<size_t>(i) * src_row + t0 * 2,
                  static_cast<size_t>(frames) * 2 * sizeof(double));
    }
    return out;
  };
  TrainingPair out;
  out.lr_input_rate = pair.lr_input_rate;
  out.cutoff_bins = pair.cutoff_bins;
  out.x_l = crop(pair.x_l);
  out.x_h_target = crop(pair.x_h_target);
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!std::getline(ss, e.path, '\t') || !std::getline(ss, e.domain, '\t') ||
        !(ss >> e.duration_s)) {
      throw DataError("manifest: malformed line " + std::to_string(lineno) +
                      " in " + path);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw DataError("manifest: cannot write " + path);
  for (const auto& e : entries) {
    out << e.path << '\t' << e.domain << '\t' << e.duration_s << '\n';
  }
  if (!out) throw DataError("manifest: write failed for " + path);
}

std::vector<Waveform> segment_hr(const Waveform& prepared) {
  if (prepared.sample_rate != kFullRate) {
    throw DataError("segment_hr: expected 48 kHz input");
  }
  std::vector<Waveform> segments;
  const size_t len = prepared.samples.size();
  for (size_t off = 0; off + kSegmentSamples <= len; off += kSegmentSamples) {
    Waveform seg;
    seg.sample_rate = kFullRate;
    seg.samples.assign(prepared.samples.begin() + off,
                       prepared.samples.begin() + off + kSegmentSamples);
    segments.push_back(std::move(seg));
  }
  return segments;
}

PairPool::PairPool(std::vector<Waveform> segments, RateDistribution dist)
    : segments_(std::move(segments)), dist_(dist) {
  if (segments_.empty()) throw DataError("PairPool: no segments");
}

const TrainingPair& PairPool::get(size_t segment_idx, int rate_idx) {
  if (segment_idx >= segments_.size() || rate_idx < 0 ||
      rate_idx >= static_cast<int>(dist_.rates.size())) {
    throw std::invalid_argument("PairPool: index out of range");
  }
  const auto key = std::make_pair(segment_idx, rate_idx);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_
             .emplace(key, build_pair(segments_[segment_idx],
                                      dist_.rates[rate_idx],
                                      dist_.cutoff_bins[rate_idx]))
             .first;
  }
  return it->second;
}

}  // namespace bandflow
