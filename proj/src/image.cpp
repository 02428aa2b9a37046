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
#include "bandflow/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace bandflow {

void emit_spectrogram_image(const ComplexSpectrogram& s,
                            const std::string& path) {
  const int f = s.bins();
  const int t = s.frames();
  std::vector<double> db(static_cast<size_t>(f) * t);
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < t; ++j) {
      const double re = s.coeffs.at(i, j, 0);
      const double im = s.coeffs.at(i, j, 1);
      const double v = 10.0 * std::log10(re * re + im * im + 1e-10);
      db[static_cast<size_t>(i) * t + j] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const double span = hi - lo;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("emit_spectrogram_image: cannot write " + path);
  out << "P5\n" << t << " " << f << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(t));
  for (int r = 0; r < f; ++r) {
    const int bin = f - 1 - r;  // low frequencies at the bottom
    for (int j = 0; j < t; ++j) {
      const double v = db[static_cast<size_t>(bin) * t + j];
      const double norm = span > 0.0 ? (v - lo) / span : 0.0;
      row[static_cast<size_t>(j)] =
          static_cast<unsigned char>(std::lround(255.0 * norm));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw DataError("emit_spectrogram_image: write failed: " + path);
}

}  // namespace bandflow
