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
#ifndef BANDFLOW_DSP_HPP_
#define BANDFLOW_DSP_HPP_

#include <array>
#include <string>
#include <utility>

#include "bandflow/common.hpp"
#include "bandflow/tensor.hpp"

namespace bandflow {

inline constexpr int kNFft = 1024;
inline constexpr int kHop = 512;
inline constexpr int kBins = kNFft / 2;  // one-sided, Nyquist bin dropped
inline constexpr int kMinCutoffBins = 80;
inline constexpr int kGenBins = kBins - kMinCutoffBins;
inline constexpr double kCompressAlpha = 0.2;
inline constexpr int kFullRate = 48000;

inline constexpr std::array<int, 4> kSupportedRates = {8000, 12000, 16000,
                                                       24000};
inline constexpr std::array<int, 4> kRateCutoffBins = {80, 128, 170, 256};

/// Complex STFT grid stored as a dense [F, T, 2] tensor (real, imag last).
struct ComplexSpectrogram {
  Tensor coeffs{std::vector<int>{kBins, 1, 2}};
  int n_fft = kNFft;
  int hop = kHop;
  bool compressed = false;
  double alpha = 0.0;

  int bins() const { return coeffs.shape()[0]; }
  int frames() const { return coeffs.shape()[1]; }
};

/// Frequency split between the known low band [0, F1) and the generated
/// band. The model always generates gen_bins coefficients starting at
/// min_cutoff_bins; the first (F1 - F1_min) of them overlap the known band
/// and are discarded at splice time.
struct BandLayout {
  int total_bins = kBins;
  int cutoff_bins = kMinCutoffBins;
  int min_cutoff_bins = kMinCutoffBins;
  int gen_bins = kGenBins;
};

/// Maps an arbitrary input rate to the nearest rate the model was trained
/// on (ties resolve downward). Rates at or above the output rate are
/// rejected: there is no band left to generate.
int nearest_supported_rate(int rate);

/// Cutoff bin F1 for an exactly supported rate; throws otherwise.
int cutoff_bins_for_rate(int rate);

BandLayout layout_for_rate(int rate);

/// Band-limited rate conversion with a Kaiser-windowed sinc kernel.
Waveform sinc_resample(const Waveform& w, int target_rate);

/// Zero-phase 513-tap Hann-windowed low-pass FIR; output aligned with and
/// the same length as the input.
Waveform lowpass_hann(const Waveform& w, double cutoff_hz);

/// Center-padded analysis (reflect n_fft/2 per side), periodic Hann window,
/// one-sided spectrum with the Nyquist bin dropped. T = 1 + len/hop.
ComplexSpectrogram stft(const Waveform& w);

/// Overlap-add synthesis normalized by the accumulated squared window.
/// length < 0 produces the natural (T-1)*hop samples; otherwise the output
/// is zero-padded or trimmed to exactly `length`.
Waveform istft(const ComplexSpectrogram& s, int sample_rate,
               long length = -1);

/// magnitude^alpha with phase preserved.
ComplexSpectrogram compress(const ComplexSpectrogram& s, double alpha);

/// magnitude^(1/alpha); exact inverse of compress.
ComplexSpectrogram expand(const ComplexSpectrogram& s, double alpha);

std::pair<ComplexSpectrogram, ComplexSpectrogram> split_bands(
    const ComplexSpectrogram& s, const BandLayout& layout);

/// Concatenates the known low band with the generated band, discarding the
/// leading (cutoff_bins - min_cutoff_bins) generated bins that overlap it.
ComplexSpectrogram splice_bands(const ComplexSpectrogram& low,
                                const ComplexSpectrogram& gen_high,
                                const BandLayout& layout);

/// Self-describing binary grid dump: header {F, T, n_fft, hop, compressed,
/// alpha} followed by the raw coefficients. Round trips bit-exactly.
void write_spectrogram(const std::string& path, const ComplexSpectrogram& s);
ComplexSpectrogram read_spectrogram(const std::string& path);

}  // namespace bandflow

#endif  // BANDFLOW_DSP_HPP_
