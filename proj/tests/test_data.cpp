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
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "bandflow/data.hpp"
#include "bandflow/dsp.hpp"
#include "bandflow/rng.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bandflow;

namespace {

Waveform tone(int rate, double freq, double amp, size_t len) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(len);
  for (size_t i = 0; i < len; ++i) {
    w.samples[i] = amp * std::sin(2.0 * M_PI * freq * i / rate);
  }
  return w;
}

double rms(const std::vector<double>& s, size_t from, size_t to) {
  double acc = 0.0;
  for (size_t i = from; i < to; ++i) acc += s[i] * s[i];
  return std::sqrt(acc / static_cast<double>(to - from));
}

// Single-bin DFT magnitude over [from, to).
double dft_mag(const std::vector<double>& s, size_t from, size_t to,
               double freq, int rate) {
  std::complex<double> acc = 0.0;
  for (size_t i = from; i < to; ++i) {
    const double ph = 2.0 * M_PI * freq * i / rate;
    acc += s[i] * std::complex<double>(std::cos(ph), -std::sin(ph));
  }
  return std::abs(acc) * 2.0 / static_cast<double>(to - from);
}

}  // namespace

TEST_CASE("prepare_hr trims silent frames and resamples to 48 kHz") {
  // Pure silence vanishes.
  Waveform quiet;
  quiet.sample_rate = 48000;
  quiet.samples.assign(48000, 0.0);
  CHECK(prepare_hr(quiet).samples.empty());

  // A -20 dBFS tone stays untouched.
  Waveform loud = tone(48000, 440.0, 0.1, 48128);
  CHECK(prepare_hr(loud).samples.size() == loud.samples.size());

  // tone || 2 s near-silence || tone: the middle drops out.
  const size_t tone_len = 48128;  // hop-aligned
  const size_t gap_len = 96256;
  Waveform mix;
  mix.sample_rate = 48000;
  mix.samples.reserve(2 * tone_len + gap_len);
  Rng rng(3);
  for (size_t i = 0; i < tone_len; ++i) {
    mix.samples.push_back(0.1 * std::sin(2.0 * M_PI * 440.0 * i / 48000.0));
  }
  for (size_t i = 0; i < gap_len; ++i) {
    mix.samples.push_back(0.001 * rng.normal());  // ~ -60 dBFS
  }
  for (size_t i = 0; i < tone_len; ++i) {
    mix.samples.push_back(0.1 * std::sin(2.0 * M_PI * 440.0 * i / 48000.0));
  }
  const Waveform trimmed = prepare_hr(mix);
  const auto kept = static_cast<long>(trimmed.samples.size());
  CHECK(std::abs(kept - static_cast<long>(2 * tone_len)) <= 1024);

  // Non-48 kHz input is resampled first (length scales by 48/16).
  Waveform w16 = tone(16000, 440.0, 0.1, 16000);
  const Waveform up = prepare_hr(w16);
  CHECK(up.sample_rate == 48000);
  CHECK(std::abs(static_cast<long>(up.samples.size()) - 48000l) <= 1024);
}

TEST_CASE("make_lr decimates after a guarded low-pass") {
  Waveform hr = tone(48000, 1000.0, 0.25, 96000);

  const Waveform lr = make_lr(hr, 8000);
  CHECK(lr.sample_rate == 8000);
  CHECK(lr.samples.size() == hr.samples.size() / 6);

  // 1 kHz tone survives the 8 kHz round trip within 0.5 dB.
  const Waveform back = sinc_resample(lr, 48000);
  const double in_rms = rms(hr.samples, 24000, 72000);
  const double out_rms = rms(back.samples, 24000, 72000);
  CHECK(std::abs(20.0 * std::log10(out_rms / in_rms)) < 0.5);

  // Energy above the mapped cutoff stays <= -40 dB relative to passband.
  Rng rng(11);
  Waveform noise;
  noise.sample_rate = 48000;
  noise.samples.resize(96000);
  for (auto& s : noise.samples) s = 0.2 * rng.normal();
  const Waveform nb = sinc_resample(make_lr(noise, 8000), 48000);
  double pass = 0.0, stop = 0.0;
  int pass_n = 0, stop_n = 0;
  for (double f = 200.0; f < 3500.0; f += 100.0) {
    pass += dft_mag(nb.samples, 24000, 72000, f, 48000);
    ++pass_n;
  }
  for (double f = 4600.0; f < 23000.0; f += 400.0) {
    stop += dft_mag(nb.samples, 24000, 72000, f, 48000);
    ++stop_n;
  }
  pass /= pass_n;
  stop /= stop_n;
  CHECK(20.0 * std::log10(stop / pass) <= -40.0);

  // Divisor rates decimate; off-grid rates take the sinc path.
  const Waveform lr12 = make_lr(hr, 12000);
  CHECK(lr12.sample_rate == 12000);
  CHECK(lr12.samples.size() == hr.samples.size() / 4);
  const Waveform lr18 = make_lr(hr, 18000);
  CHECK(lr18.sample_rate == 18000);
  CHECK(lr18.samples.size() == hr.samples.size() * 18000 / 48000);

  CHECK_THROWS_AS(make_lr(hr, 48000), DataError);
  CHECK_THROWS_AS(make_lr(hr, 0), DataError);
}

TEST_CASE("rate sampler follows the configured distribution") {
  RateDistribution dist;
  Rng rng(1234);
  int counts[4] = {0, 0, 0, 0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto [rate, cutoff] = sample_input_rate(rng, dist);
    int idx = -1;
    for (int r = 0; r < 4; ++r) {
      if (dist.rates[r] == rate) idx = r;
    }
    REQUIRE(idx >= 0);
    CHECK(cutoff == dist.cutoff_bins[idx]);
    ++counts[idx];
  }
  const double f8 = static_cast<double>(counts[0]) / draws;
  CHECK(f8 >= 0.69);
  CHECK(f8 <= 0.71);

  // Chi-square against {0.7, 0.1, 0.1, 0.1}: df = 3, p > 0.01 -> < 11.345.
  double chi2 = 0.0;
  for (int r = 0; r < 4; ++r) {
    const double expect = dist.probs[r] * draws;
    const double d = counts[r] - expect;
    chi2 += d * d / expect;
  }
  CHECK(chi2 < 11.345);

  // Same seed, same sequence.
  Rng a(77), b(77);
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_input_rate(a, dist) == sample_input_rate(b, dist));
  }
}

TEST_CASE("build_pair emits the fixed-shape training grids") {
  const Waveform seg = testing::fixture_clip(0);
  REQUIRE(seg.samples.size() == static_cast<size_t>(kSegmentSamples));

  for (int r = 0; r < 4; ++r) {
    const RateDistribution dist;
    const int rate = dist.rates[r];
    const int cutoff = dist.cutoff_bins[r];
    const TrainingPair pair = build_pair(seg, rate, cutoff);
    CHECK(pair.lr_input_rate == rate);
    CHECK(pair.cutoff_bins == cutoff);
    CHECK(pair.x_l.shape() ==
          std::vector<int>{cutoff, kSegmentFrames, 2});
    CHECK(pair.x_h_target.shape() ==
          std::vector<int>{kBins - kMinCutoffBins, kSegmentFrames, 2});
    CHECK(pair.x_l.is_finite());
    CHECK(pair.x_h_target.is_finite());
  }

  // The target band is cut from the clean HR spectrum, bit for bit.
  const TrainingPair pair = build_pair(seg, 8000, 80);
  const ComplexSpectrogram hr_comp = compress(stft(seg), kCompressAlpha);
  const Tensor want = slice_bins(hr_comp.coeffs, kMinCutoffBins, kBins);
  REQUIRE(pair.x_h_target.shape() == want.shape());
  CHECK(std::memcmp(pair.x_h_target.data(), want.data(),
                    sizeof(double) * want.numel()) == 0);

  // Determinism: same inputs, same bits.
  const TrainingPair again = build_pair(seg, 8000, 80);
  CHECK(std::memcmp(again.x_l.data(), pair.x_l.data(),
                    sizeof(double) * pair.x_l.numel()) == 0);

  // Mis-paired rate/cutoff and bad lengths are rejected.
  CHECK_THROWS_AS(build_pair(seg, 8000, 128), DataError);
  Waveform short_seg = seg;
  short_seg.samples.resize(1000);
  CHECK_THROWS_AS(build_pair(short_seg, 8000, 80), DataError);
}

TEST_CASE("crop_pair slices frame columns") {
  const Waveform seg = testing::fixture_clip(1);
  const TrainingPair pair = build_pair(seg, 16000, 170);
  const TrainingPair crop = crop_pair(pair, 37, 32);
  CHECK(crop.x_l.shape() == std::vector<int>{170, 32, 2});
  CHECK(crop.x_h_target.shape() == std::vector<int>{432, 32, 2});
  for (int f : {0, 100, 169}) {
    for (int t = 0; t < 32; ++t) {
      CHECK(crop.x_l.at(f, t, 0) == pair.x_l.at(f, 37 + t, 0));
      CHECK(crop.x_l.at(f, t, 1) == pair.x_l.at(f, 37 + t, 1));
    }
  }
  for (int f : {0, 431}) {
    for (int t = 0; t < 32; ++t) {
      CHECK(crop.x_h_target.at(f, t, 0) == pair.x_h_target.at(f, 37 + t, 0));
    }
  }
  CHECK_THROWS_AS(crop_pair(pair, 250, 32), std::invalid_argument);
  CHECK_THROWS_AS(crop_pair(pair, -1, 32), std::invalid_argument);
}

TEST_CASE("slice_bins copies contiguous rows") {
  Tensor grid({4, 3, 2});
  for (int64_t i = 0; i < grid.numel(); ++i) grid.data()[i] = i;
  const Tensor rows = slice_bins(grid, 1, 3);
  REQUIRE(rows.shape() == std::vector<int>{2, 3, 2});
  for (int f = 0; f < 2; ++f) {
    for (int t = 0; t < 3; ++t) {
      CHECK(rows.at(f, t, 0) == grid.at(f + 1, t, 0));
      CHECK(rows.at(f, t, 1) == grid.at(f + 1, t, 1));
    }
  }
  CHECK_THROWS_AS(slice_bins(grid, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(slice_bins(grid, 0, 9), std::invalid_argument);
}

TEST_CASE("segment_hr cuts whole segments only") {
  Waveform w;
  w.sample_rate = 48000;
  w.samples.assign(2 * kSegmentSamples + 5000, 0.25);
  const auto segs = segment_hr(w);
  REQUIRE(segs.size() == 2);
  for (const auto& s : segs) {
    CHECK(s.samples.size() == static_cast<size_t>(kSegmentSamples));
    CHECK(s.sample_rate == 48000);
  }
  Waveform shorter;
  shorter.sample_rate = 48000;
  shorter.samples.assign(kSegmentSamples - 1, 0.25);
  CHECK(segment_hr(shorter).empty());
}

TEST_CASE("manifest files round trip and reject malformed rows") {
  const std::string path = "manifest_test.tsv";
  std::vector<ManifestEntry> entries{
      {"clips/a.wav", "speech", 3.25},
      {"clips/b.wav", "music", 11.0},
  };
  write_manifest(path, entries);
  const auto back = read_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].path == "clips/a.wav");
  CHECK(back[0].domain == "speech");
  CHECK(back[0].duration_s == doctest::Approx(3.25));
  CHECK(back[1].domain == "music");

  FILE* f = std::fopen(path.c_str(), "w");
  std::fputs("only_one_field\n", f);
  std::fclose(f);
  CHECK_THROWS_AS(read_manifest(path), DataError);
  CHECK_THROWS_AS(read_manifest("missing_manifest.tsv"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("pair pool caches by segment and rate") {
  std::vector<Waveform> segs{testing::fixture_clip(0),
                             testing::fixture_clip(2)};
  PairPool pool(std::move(segs), RateDistribution{});
  REQUIRE(pool.size() == 2);
  const TrainingPair& a = pool.get(1, 0);
  const TrainingPair& b = pool.get(1, 0);
  CHECK(&a == &b);  // cached, not rebuilt
  CHECK(a.lr_input_rate == 8000);
  const TrainingPair& c = pool.get(1, 3);
  CHECK(c.lr_input_rate == 24000);
  CHECK(c.cutoff_bins == 256);

  CHECK_THROWS_AS(PairPool({}, RateDistribution{}), DataError);
}
