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
#ifndef BANDFLOW_FFT_HPP_
#define BANDFLOW_FFT_HPP_

#include <complex>
#include <vector>

namespace bandflow {

/// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

/// Forward transform of a real frame; returns n/2+1 one-sided bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& frame);

/// Inverse of rfft: n/2+1 one-sided bins back to n real samples.
std::vector<double> irfft(const std::vector<std::complex<double>>& bins, int n);

}  // namespace bandflow

#endif  // BANDFLOW_FFT_HPP_
