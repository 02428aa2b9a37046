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
#ifndef BANDFLOW_WAV_HPP_
#define BANDFLOW_WAV_HPP_

#include <string>

#include "bandflow/common.hpp"

namespace bandflow {

enum class WavFormat { kPcm16, kFloat32 };

/// Reads a PCM 16-bit or IEEE float 32-bit WAV. Multichannel input is mean
/// downmixed when allow_downmix, otherwise rejected with DataError.
Waveform read_wav(const std::string& path, bool allow_downmix = true);

void write_wav(const std::string& path, const Waveform& w,
               WavFormat format = WavFormat::kPcm16);

}  // namespace bandflow

#endif  // BANDFLOW_WAV_HPP_
