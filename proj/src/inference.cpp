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
#include "bandflow/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bandflow/flow.hpp"
#include "bandflow/rng.hpp"

namespace bandflow {

namespace {

constexpr uint64_t kNoiseStream = 0x6e6f697365;  // "noise"

void check_stage(const Tensor& x, const std::string& stage) {
  if (!x.is_finite()) {
    throw NumericError("super_resolve: non-finite values after " + stage);
  }
}

int rate_index_of(int rate) {
  for (size_t i = 0; i < kSupportedRates.size(); ++i) {
    if (kSupportedRates[i] == rate) return static_cast<int>(i);
  }
  throw std::invalid_argument("rate_index_of: unmapped rate");
}

/// One full spectral pass over a 48 kHz chunk.
Waveform process_chunk(const Waveform& chunk48, const Model& model,
                       const BandLayout& layout, int rate_idx,
                       const UpsampleOptions& opts, uint64_t chunk_seed,
                       SuperResolveDebug* debug) {
  ComplexSpectrogram spec = stft(chunk48);
  check_stage(spec.coeffs, "stft");
  ComplexSpectrogram comp = compress(spec, kCompressAlpha);
  check_stage(comp.coeffs, "compress");
  auto [low, high] = split_bands(comp, layout);
  (void)high;

  Var c_lf = model.feature_encode(constant(low.coeffs), rate_idx);
  check_stage(c_lf->value, "feature_encode");
  Var cond = model.assemble_condition(c_lf);
  Var null_cond = model.assemble_condition(
      model.null_condition(comp.frames()));

  FieldFn field = [&](double t, const Tensor& x) -> Tensor {
    Var x_t = constant(x);
    Var v_c = model.vfe_forward(t, x_t, cond, rate_idx);
    if (opts.omega == 1.0) return v_c->value;
    Var v_u = model.vfe_forward(t, x_t, null_cond, rate_idx);
    return cfg_combine(v_c->value, v_u->value, opts.omega);
  };

  Rng noise_rng(chunk_seed);
  Tensor x0 = Tensor::randn({layout.gen_bins, comp.frames(), 2}, noise_rng);
  Tensor x_h = midpoint_solve(field, x0, opts.steps);
  check_stage(x_h, "solve");

  ComplexSpectrogram gen = comp;
  gen.coeffs = std::move(x_h);
  ComplexSpectrogram spliced = splice_bands(low, gen, layout);
  check_stage(spliced.coeffs, "splice");
  if (debug) {
    debug->x_l = low.coeffs;
    debug->spliced = spliced;
    debug->cutoff_bins = layout.cutoff_bins;
  }

  ComplexSpectrogram full = expand(spliced, kCompressAlpha);
  check_stage(full.coeffs, "expand");
  Waveform out = istft(full, kFullRate,
                       static_cast<long>(chunk48.samples.size()));
  if (!all_finite(out.samples)) {
    throw NumericError("super_resolve: non-finite values after istft");
  }
  return out;
}

}  // namespace

Waveform super_resolve(const Waveform& w_lr, const Model& model,
                       const UpsampleOptions& opts,
                       SuperResolveDebug* debug) {
  if (opts.steps <= 0) throw UsageError("super_resolve: steps must be > 0");
  if (opts.omega <= 0.0) throw UsageError("super_resolve: omega must be > 0");
  const int model_rate = nearest_supported_rate(w_lr.sample_rate);
  const BandLayout layout = layout_for_rate(model_rate);
  const int rate_idx = rate_index_of(model_rate);
  if (debug) debug->model_rate = model_rate;

  NoGradGuard eval_mode;
  Waveform up48 = sinc_resample(w_lr, kFullRate);
  if (static_cast<long>(up48.samples.size()) < kHop) {
    throw DataError("super_resolve: input shorter than one STFT hop");
  }

  const auto chunk_len =
      static_cast<size_t>(std::lround(opts.chunk_seconds * kFullRate));
  const auto overlap =
      static_cast<size_t>(std::lround(opts.overlap_seconds * kFullRate));
  if (chunk_len == 0 || overlap >= chunk_len) {
    throw UsageError("super_resolve: chunk must be longer than the overlap");
  }

  const size_t total = up48.samples.size();
  Waveform out;
  out.sample_rate = kFullRate;
  out.samples.assign(total, 0.0);

  size_t start = 0;
  long chunk_idx = 0;
  size_t written = 0;  // samples finalized so far
  while (start < total) {
    const size_t end = std::min(start + chunk_len, total);
    Waveform chunk;
    chunk.sample_rate = kFullRate;
    chunk.samples.assign(up48.samples.begin() + start,
                         up48.samples.begin() + end);
    Waveform part = process_chunk(
        chunk, model, layout, rate_idx, opts,
        mix_seed(opts.seed, kNoiseStream, static_cast<uint64_t>(chunk_idx), 0),
        chunk_idx == 0 ? debug : nullptr);

    const size_t fade = std::min<size_t>(
        written > start ? written - start : 0, part.samples.size());
    for (size_t i = 0; i < fade; ++i) {
      const double w = static_cast<double>(i + 1) /
                       static_cast<double>(fade + 1);
      out.samples[start + i] =
          (1.0 - w) * out.samples[start + i] + w * part.samples[i];
    }
    for (size_t i = fade; i < part.samples.size(); ++i) {
      out.samples[start + i] = part.samples[i];
    }
    written = end;
    if (end == total) break;
    start = end - overlap;
    ++chunk_idx;
  }

  if (opts.limiter) {
    double peak = 0.0;
    for (double s : out.samples) peak = std::max(peak, std::abs(s));
    const double ceiling = std::pow(10.0, -1.0 / 20.0);
    if (peak > ceiling) {
      const double g = ceiling / peak;
      for (double& s : out.samples) s *= g;
    }
  }
  return out;
}

}  // namespace bandflow
