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
#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bandflow/data.hpp"
#include "bandflow/wav.hpp"

namespace bandflow::testing {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr int kRate = 48000;

struct Partial {
  double freq;
  double amp;
};

// Fixed partial stack under slow amplitude modulation, peak-normalized.
// The clips are closed-form and steady so reruns are bit-identical and
// short training runs have a learnable target.
Waveform render(const std::vector<Partial>& partials, double am_hz,
                double am_depth) {
  Waveform w;
  w.sample_rate = kRate;
  w.samples.resize(kSegmentSamples);
  double peak = 0.0;
  for (long i = 0; i < kSegmentSamples; ++i) {
    const double t = static_cast<double>(i) / kRate;
    double acc = 0.0;
    for (const Partial& p : partials) {
      acc += p.amp * std::sin(kTwoPi * p.freq * t);
    }
    const double am =
        1.0 - am_depth + am_depth * (0.5 + 0.5 * std::sin(kTwoPi * am_hz * t));
    w.samples[i] = am * acc;
    peak = std::max(peak, std::abs(w.samples[i]));
  }
  for (auto& s : w.samples) s *= 0.5 / peak;
  return w;
}

std::vector<Partial> harmonic_stack(double f0, double max_hz, double decay) {
  std::vector<Partial> ps;
  for (int n = 1; n * f0 <= max_hz; ++n) {
    ps.push_back({n * f0, 1.0 / std::pow(n, decay)});
  }
  return ps;
}

Waveform voice_like() {
  return render(harmonic_stack(155.0, 23000.0, 1.0), 1.1, 0.4);
}

Waveform chord_like() {
  std::vector<Partial> ps;
  for (const double root : {110.0, 138.59, 164.81}) {
    for (const Partial& p : harmonic_stack(root, 22000.0, 1.0)) {
      ps.push_back(p);
    }
  }
  return render(ps, 0.7, 0.3);
}

Waveform reed_like() {
  // Bright: slow spectral decay keeps the top octaves loud.
  return render(harmonic_stack(523.25, 22500.0, 0.5), 1.7, 0.2);
}

Waveform bell_like() {
  std::vector<Partial> ps;
  for (int p = 1; p <= 25; ++p) {
    const double freq = 620.0 * std::pow(p, 1.11);
    if (freq > 23000.0) break;
    ps.push_back({freq, 1.0 / std::pow(p, 0.6)});
  }
  return render(ps, 0.9, 0.3);
}

}  // namespace

Waveform fixture_clip(int idx) {
  switch (idx) {
    case 0:
      return voice_like();
    case 1:
      return chord_like();
    case 2:
      return reed_like();
    case 3:
      return bell_like();
    default:
      throw std::invalid_argument("fixture_clip: idx outside [0, 4)");
  }
}

std::string write_fixture_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const char* names[kFixtureClips] = {"voice.wav", "chord.wav", "reed.wav",
                                      "bell.wav"};
  const char* domains[kFixtureClips] = {"speech", "music", "synthetic",
                                        "percussion"};
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < kFixtureClips; ++i) {
    const Waveform clip = fixture_clip(i);
    const std::string path = dir + "/" + names[i];
    write_wav(path, clip, WavFormat::kFloat32);
    entries.push_back({path, domains[i], clip.duration_s()});
  }
  const std::string manifest = dir + "/manifest.tsv";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace bandflow::testing
