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
#include "bandflow/fft.hpp"

#include <cmath>
#include <stdexcept>

namespace bandflow {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(size_t n) { return n && (n & (n - 1)) == 0; }
}  // namespace

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

std::vector<std::complex<double>> rfft(const std::vector<double>& frame) {
  std::vector<std::complex<double>> a(frame.begin(), frame.end());
  fft_inplace(a, false);
  a.resize(frame.size() / 2 + 1);
  return a;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& bins, int n) {
  if (static_cast<int>(bins.size()) != n / 2 + 1)
    throw std::invalid_argument("irfft: expected n/2+1 bins");
  std::vector<std::complex<double>> a(static_cast<size_t>(n));
  for (int k = 0; k <= n / 2; ++k) a[static_cast<size_t>(k)] = bins[static_cast<size_t>(k)];
  for (int k = n / 2 + 1; k < n; ++k)
    a[static_cast<size_t>(k)] = std::conj(bins[static_cast<size_t>(n - k)]);
  fft_inplace(a, true);
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].real();
  return out;
}

}  // namespace bandflow
