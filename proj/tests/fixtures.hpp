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
#ifndef BANDFLOW_TESTS_FIXTURES_HPP_
#define BANDFLOW_TESTS_FIXTURES_HPP_

#include <string>

#include "bandflow/common.hpp"

namespace bandflow::testing {

inline constexpr int kFixtureClips = 4;

/// Deterministic 130,560-sample 48 kHz clip. Every clip is loud enough to
/// survive silence trimming and carries harmonic energy well above 12 kHz
/// so the generation band is non-trivial. idx selects timbre.
Waveform fixture_clip(int idx);

/// Writes the four clips as float WAVs plus manifest.tsv under dir;
/// returns the manifest path.
std::string write_fixture_corpus(const std::string& dir);

}  // namespace bandflow::testing

#endif  // BANDFLOW_TESTS_FIXTURES_HPP_
