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
#include "bandflow/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "bandflow/fft.hpp"

namespace bandflow {
namespace {

constexpr double kPi = 3.14159265358979323846;

// Kaiser-windowed sinc interpolation kernel: 64 zero crossings per side,
// beta chosen for a stopband well beyond 80 dB, slight rolloff to keep the
// transition band inside Nyquist.
constexpr int kSincZeros = 64;
constexpr double kKaiserBeta = 14.769656459379492;
constexpr double kSincRolloff = 0.9475937167399596;
constexpr int kSincTableDensity = 1024;  // samples per zero crossing

double bessel_i0(double x) {
  // Power series; converges quickly for the beta values used here.
  double sum = 1.0, term = 1.0;
  double half = x / 2.0;
  for (int k = 1; k < 64; ++k) {
    term *= (half / k) * (half / k);
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

// Half kernel sampled on [0, kSincZeros] in zero-crossing units.
const std::vector<double>& sinc_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kSincZeros * kSincTableDensity + 2);
    const double inv_i0 = 1.0 / bessel_i0(kKaiserBeta);
    for (size_t i = 0; i < t.size(); ++i) {
      double u = static_cast<double>(i) / kSincTableDensity;
      if (u >= kSincZeros) {
        t[i] = 0.0;
      } else {
        double frac = u / kSincZeros;
        double win = bessel_i0(kKaiserBeta * std::sqrt(1.0 - frac * frac)) *
                     inv_i0;
        t[i] = sinc(u) * win;
      }
    }
    return t;
  }();
  return table;
}

double kernel_at(double u) {
  // Linear interpolation into the tabulated half kernel.
  u = std::abs(u);
  if (u >= kSincZeros) return 0.0;
  double pos = u * kSincTableDensity;
  auto idx = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(idx);
  const auto& t = sinc_table();
  return t[idx] + frac * (t[idx + 1] - t[idx]);
}

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  }
  return w;
}

void require_uncompressed(const ComplexSpectrogram& s, const char* op) {
  if (s.compressed) {
    throw std::invalid_argument(std::string(op) +
                                ": spectrogram is compressed; expand first");
  }
}

}  // namespace

int nearest_supported_rate(int rate) {
  if (rate <= 0 || rate >= kFullRate) {
    std::string msg = "unsupported input rate " + std::to_string(rate) +
                      " Hz; supported (or nearby) rates:";
    for (int r : kSupportedRates) msg += " " + std::to_string(r);
    throw DataError(msg);
  }
  int best = kSupportedRates[0];
  for (int r : kSupportedRates) {
    if (std::abs(r - rate) < std::abs(best - rate)) best = r;
  }
  return best;
}

int cutoff_bins_for_rate(int rate) {
  for (size_t i = 0; i < kSupportedRates.size(); ++i) {
    if (kSupportedRates[i] == rate) return kRateCutoffBins[i];
  }
  std::string msg = "rate " + std::to_string(rate) +
                    " Hz has no cutoff mapping; supported rates:";
  for (int r : kSupportedRates) msg += " " + std::to_string(r);
  throw DataError(msg);
}

BandLayout layout_for_rate(int rate) {
  BandLayout layout;
  layout.cutoff_bins = cutoff_bins_for_rate(nearest_supported_rate(rate));
  return layout;
}

Waveform sinc_resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw std::invalid_argument("target_rate must be > 0");
  if (!all_finite(w.samples)) {
    throw NumericError("sinc_resample: non-finite input sample");
  }
  Waveform out;
  out.sample_rate = target_rate;
  if (w.samples.empty()) return out;
  if (target_rate == w.sample_rate) {
    out.samples = w.samples;
    return out;
  }

  const auto src = static_cast<int64_t>(w.sample_rate);
  const auto dst = static_cast<int64_t>(target_rate);
  const auto in_len = static_cast<int64_t>(w.samples.size());
  const int64_t out_len = (in_len * dst + src / 2) / src;
  out.samples.resize(static_cast<size_t>(out_len));

  // Cutoff relative to the input Nyquist; shrunk when downsampling.
  const double scale = std::min(1.0, static_cast<double>(dst) / src);
  const double cutoff = scale * kSincRolloff;
  const double support = kSincZeros / cutoff;

  for (int64_t n = 0; n < out_len; ++n) {
    // Exact input-domain position of output sample n.
    const int64_t num = n * src;
    const auto center_i = static_cast<double>(num / dst);
    const double center = center_i + static_cast<double>(num % dst) / dst;
    auto lo = static_cast<int64_t>(std::ceil(center - support));
    auto hi = static_cast<int64_t>(std::floor(center + support));
    lo = std::max<int64_t>(lo, 0);
    hi = std::min<int64_t>(hi, in_len - 1);
    double acc = 0.0;
    for (int64_t i = lo; i <= hi; ++i) {
      acc += w.samples[static_cast<size_t>(i)] *
             kernel_at((center - static_cast<double>(i)) * cutoff);
    }
    out.samples[static_cast<size_t>(n)] = acc * cutoff;
  }
  return out;
}

Waveform lowpass_hann(const Waveform& w, double cutoff_hz) {
  const double nyquist = w.sample_rate / 2.0;
  if (cutoff_hz <= 0.0 || cutoff_hz >= nyquist) {
    throw std::invalid_argument("lowpass cutoff must lie in (0, nyquist)");
  }
  constexpr int kTaps = 513;
  constexpr int kHalf = kTaps / 2;

  std::vector<double> h(kTaps);
  const double fc = cutoff_hz / w.sample_rate;  // cycles per sample
  for (int k = 0; k < kTaps; ++k) {
    double m = k - kHalf;
    double win = 0.5 * (1.0 - std::cos(2.0 * kPi * k / (kTaps - 1)));
    h[k] = 2.0 * fc * sinc(2.0 * fc * m) * win;
  }
  const double gain = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v /= gain;  // exact unity at DC

  Waveform out;
  out.sample_rate = w.sample_rate;
  const auto n = static_cast<long>(w.samples.size());
  out.samples.assign(w.samples.size(), 0.0);
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    // Group delay folded into the index so output stays aligned.
    const long base = i - kHalf;
    const long k0 = std::max<long>(0, -base);
    const long k1 = std::min<long>(kTaps - 1, n - 1 - base);
    for (long k = k0; k <= k1; ++k) {
      acc += h[static_cast<size_t>(k)] * w.samples[static_cast<size_t>(base + k)];
    }
    out.samples[static_cast<size_t>(i)] = acc;
  }
  return out;
}

ComplexSpectrogram stft(const Waveform& w) {
  const auto len = static_cast<long>(w.samples.size());
  if (len < kNFft) {
    throw DataError("stft: input shorter than one window (" +
                    std::to_string(len) + " < " + std::to_string(kNFft) + ")");
  }
  const int pad = kNFft / 2;
  std::vector<double> padded(static_cast<size_t>(len + 2 * pad));
  for (long i = 0; i < pad; ++i) {
    padded[static_cast<size_t>(i)] = w.samples[static_cast<size_t>(pad - i)];
  }
  std::copy(w.samples.begin(), w.samples.end(), padded.begin() + pad);
  for (long i = 0; i < pad; ++i) {
    padded[static_cast<size_t>(pad + len + i)] =
        w.samples[static_cast<size_t>(len - 2 - i)];
  }

  const long t_frames = 1 + len / kHop;
  static const std::vector<double> win = hann_periodic(kNFft);

  ComplexSpectrogram s;
  s.coeffs = Tensor({kBins, static_cast<int>(t_frames), 2});
  std::vector<double> frame(kNFft);
  for (long t = 0; t < t_frames; ++t) {
    const size_t off = static_cast<size_t>(t) * kHop;
    for (int i = 0; i < kNFft; ++i) frame[i] = padded[off + i] * win[i];
    const auto bins = rfft(frame);
    for (int f = 0; f < kBins; ++f) {
      s.coeffs.at(f, static_cast<int>(t), 0) = bins[f].real();
      s.coeffs.at(f, static_cast<int>(t), 1) = bins[f].imag();
    }
  }
  return s;
}

Waveform istft(const ComplexSpectrogram& s, int sample_rate, long length) {
  require_uncompressed(s, "istft");
  if (!s.coeffs.is_finite()) throw NumericError("istft: non-finite grid");
  if (s.bins() != kBins) {
    throw std::invalid_argument("istft: expected " + std::to_string(kBins) +
                                " bins, got " + std::to_string(s.bins()));
  }
  const int t_frames = s.frames();
  const int pad = kNFft / 2;
  const long natural = static_cast<long>(t_frames - 1) * kHop;
  const long total = natural + 2l * pad;

  static const std::vector<double> win = hann_periodic(kNFft);
  std::vector<double> acc(static_cast<size_t>(total), 0.0);
  std::vector<double> norm(static_cast<size_t>(total), 0.0);
  std::vector<std::complex<double>> bins(kNFft / 2 + 1);
  for (int t = 0; t < t_frames; ++t) {
    for (int f = 0; f < kBins; ++f) {
      bins[f] = {s.coeffs.at(f, t, 0), s.coeffs.at(f, t, 1)};
    }
    bins[kBins] = 0.0;  // dropped Nyquist bin re-enters as zero
    const auto frame = irfft(bins, kNFft);
    const size_t off = static_cast<size_t>(t) * kHop;
    for (int i = 0; i < kNFft; ++i) {
      acc[off + i] += frame[i] * win[i];
      norm[off + i] += win[i] * win[i];
    }
  }

  Waveform out;
  out.sample_rate = sample_rate;
  const long want = length < 0 ? natural : length;
  out.samples.assign(static_cast<size_t>(want), 0.0);
  // The last half window past the natural length has single-frame
  // coverage; it is still valid overlap-add output.
  const long have = std::min(want, natural + pad);
  for (long i = 0; i < have; ++i) {
    const auto j = static_cast<size_t>(i + pad);
    out.samples[static_cast<size_t>(i)] =
        norm[j] > 1e-12 ? acc[j] / norm[j] : 0.0;
  }
  return out;
}

ComplexSpectrogram compress(const ComplexSpectrogram& s, double alpha) {
  if (s.compressed) throw std::invalid_argument("compress: already compressed");
  if (alpha <= 0.0 || alpha > 1.0) {
    throw std::invalid_argument("compress: alpha must lie in (0, 1]");
  }
  ComplexSpectrogram out = s;
  out.compressed = true;
  out.alpha = alpha;
  double* d = out.coeffs.data();
  const long n = out.coeffs.numel();
  for (long i = 0; i < n; i += 2) {
    const double r = std::hypot(d[i], d[i + 1]);
    if (r > 0.0) {
      const double m = std::pow(r, alpha);
      d[i] = d[i] / r * m;
      d[i + 1] = d[i + 1] / r * m;
    }
  }
  return out;
}

ComplexSpectrogram expand(const ComplexSpectrogram& s, double alpha) {
  if (!s.compressed) throw std::invalid_argument("expand: not compressed");
  if (s.alpha != alpha) {
    throw std::invalid_argument("expand: alpha mismatch (compressed with " +
                                std::to_string(s.alpha) + ")");
  }
  ComplexSpectrogram out = s;
  out.compressed = false;
  out.alpha = 0.0;
  double* d = out.coeffs.data();
  const long n = out.coeffs.numel();
  for (long i = 0; i < n; i += 2) {
    const double r = std::hypot(d[i], d[i + 1]);
    if (r > 0.0) {
      const double m = std::pow(r, 1.0 / alpha);
      d[i] = d[i] / r * m;
      d[i + 1] = d[i + 1] / r * m;
    }
  }
  return out;
}

std::pair<ComplexSpectrogram, ComplexSpectrogram> split_bands(
    const ComplexSpectrogram& s, const BandLayout& layout) {
  const int f1 = layout.cutoff_bins;
  if (f1 <= 0 || f1 >= s.bins()) {
    throw std::invalid_argument("split_bands: cutoff " + std::to_string(f1) +
                                " outside (0, " + std::to_string(s.bins()) +
                                ")");
  }
  const int t = s.frames();
  ComplexSpectrogram low = s, high = s;
  low.coeffs = Tensor({f1, t, 2});
  high.coeffs = Tensor({s.bins() - f1, t, 2});
  const size_t row = static_cast<size_t>(t) * 2;
  std::copy_n(s.coeffs.data(), row * f1, low.coeffs.data());
  std::copy_n(s.coeffs.data() + row * f1, row * (s.bins() - f1),
              high.coeffs.data());
  return {std::move(low), std::move(high)};
}

ComplexSpectrogram splice_bands(const ComplexSpectrogram& low,
                                const ComplexSpectrogram& gen_high,
                                const BandLayout& layout) {
  if (low.bins() != layout.cutoff_bins) {
    throw std::invalid_argument("splice_bands: low band has " +
                                std::to_string(low.bins()) + " bins, layout " +
                                std::to_string(layout.cutoff_bins));
  }
  if (gen_high.bins() != layout.gen_bins) {
    throw std::invalid_argument("splice_bands: generated band has " +
                                std::to_string(gen_high.bins()) +
                                " bins, expected " +
                                std::to_string(layout.gen_bins));
  }
  if (low.frames() != gen_high.frames() ||
      low.compressed != gen_high.compressed) {
    throw std::invalid_argument("splice_bands: band metadata mismatch");
  }
  const int t = low.frames();
  const int drop = layout.cutoff_bins - layout.min_cutoff_bins;
  ComplexSpectrogram out = low;
  out.coeffs = Tensor({layout.total_bins, t, 2});
  const size_t row = static_cast<size_t>(t) * 2;
  std::copy_n(low.coeffs.data(), row * low.bins(), out.coeffs.data());
  std::copy_n(gen_high.coeffs.data() + row * drop,
              row * (layout.total_bins - layout.cutoff_bins),
              out.coeffs.data() + row * low.bins());
  return out;
}

namespace {

constexpr char kSpecMagic[8] = {'B', 'F', 'S', 'P', 'E', 'C', '0', '1'};

}  // namespace

void write_spectrogram(const std::string& path, const ComplexSpectrogram& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_spectrogram: cannot open " + path);
  out.write(kSpecMagic, sizeof(kSpecMagic));
  const int32_t header[4] = {static_cast<int32_t>(s.bins()),
                             static_cast<int32_t>(s.frames()),
                             static_cast<int32_t>(s.n_fft),
                             static_cast<int32_t>(s.hop)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  const uint8_t compressed = s.compressed ? 1 : 0;
  out.write(reinterpret_cast<const char*>(&compressed), 1);
  out.write(reinterpret_cast<const char*>(&s.alpha), sizeof(double));
  out.write(reinterpret_cast<const char*>(s.coeffs.data()),
            static_cast<std::streamsize>(s.coeffs.numel() * sizeof(double)));
  if (!out) throw DataError("write_spectrogram: write failed: " + path);
}

ComplexSpectrogram read_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_spectrogram: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSpecMagic, sizeof(magic)) != 0) {
    throw DataError("read_spectrogram: bad magic in " + path);
  }
  int32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  uint8_t compressed = 0;
  in.read(reinterpret_cast<char*>(&compressed), 1);
  ComplexSpectrogram s;
  in.read(reinterpret_cast<char*>(&s.alpha), sizeof(double));
  if (!in || header[0] <= 0 || header[1] <= 0) {
    throw DataError("read_spectrogram: truncated header in " + path);
  }
  s.n_fft = header[2];
  s.hop = header[3];
  s.compressed = compressed != 0;
  s.coeffs = Tensor({header[0], header[1], 2});
  in.read(reinterpret_cast<char*>(s.coeffs.data()),
          static_cast<std::streamsize>(s.coeffs.numel() * sizeof(double)));
  if (!in) throw DataError("read_spectrogram: truncated payload in " + path);
  return s;
}

}  // namespace bandflow
