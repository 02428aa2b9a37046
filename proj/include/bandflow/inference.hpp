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
#ifndef BANDFLOW_INFERENCE_HPP_
#define BANDFLOW_INFERENCE_HPP_

#include <cstdint>

#include "bandflow/dsp.hpp"
#include "bandflow/model.hpp"

namespace bandflow {

struct UpsampleOptions {
  double omega = 1.5;
  int steps = 4;
  uint64_t seed = 0;
  double chunk_seconds = 10.0;
  double overlap_seconds = 0.5;
  bool limiter = false;  // scale the output down to a -1 dBFS peak
};

/// Spectral-domain intermediates of the first processed chunk, for tests
/// that assert the splice contract before any iSTFT rounding.
struct SuperResolveDebug {
  Tensor x_l;                  // compressed low band fed to the model
  ComplexSpectrogram spliced;  // compressed full grid, pre-expand/iSTFT
  int cutoff_bins = 0;
  int model_rate = 0;
};

/// LR waveform to 48 kHz: sinc upsample, STFT, compress, generate the
/// missing band by integrating the learned field under classifier-free
/// guidance, splice, expand, iSTFT. Inputs longer than chunk_seconds are
/// processed in overlapping chunks joined by a linear crossfade.
/// Output length = round(len * 48000 / input rate).
Waveform super_resolve(const Waveform& w_lr, const Model& model,
                       const UpsampleOptions& opts,
                       SuperResolveDebug* debug = nullptr);

}  // namespace bandflow

#endif  // BANDFLOW_INFERENCE_HPP_
