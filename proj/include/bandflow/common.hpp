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
#ifndef BANDFLOW_COMMON_HPP_
#define BANDFLOW_COMMON_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bandflow {

// Exit-code taxonomy used by the CLI: usage 1, data 2, numeric 3.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mono waveform: amplitudes are dimensionless, nominal range [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 0;

  long size() const { return static_cast<long>(samples.size()); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace bandflow

#endif  // BANDFLOW_COMMON_HPP_
