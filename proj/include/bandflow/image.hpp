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
#ifndef BANDFLOW_IMAGE_HPP_
#define BANDFLOW_IMAGE_HPP_

#include <string>

#include "bandflow/dsp.hpp"

namespace bandflow {

/// Renders dB magnitudes as an 8-bit binary PGM, width = frames,
/// height = bins, low frequencies at the bottom row. The mapping is
/// min-max normalized and monotone; an all-equal grid renders flat black.
void emit_spectrogram_image(const ComplexSpectrogram& s,
                            const std::string& path);

}  // namespace bandflow

#endif  // BANDFLOW_IMAGE_HPP_
