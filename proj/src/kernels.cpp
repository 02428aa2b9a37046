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
#include "bandflow/kernels.hpp"

#include <cstring>

namespace bandflow {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  for (int p = 0; p < k; ++p) {
    const double* arow = a + static_cast<size_t>(p) * m;
    const double* brow = b + static_cast<size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c + static_cast<size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

void im2col(const double* x, int f, int t, int c, int kf, int kt, int sf,
            int st, int pf, int pt, int of, int ot, double* col) {
  const size_t patch = static_cast<size_t>(kf) * kt * c;
  for (int i = 0; i < of; ++i) {
    for (int j = 0; j < ot; ++j) {
      double* row = col + (static_cast<size_t>(i) * ot + j) * patch;
      for (int df = 0; df < kf; ++df) {
        const int sf_i = i * sf - pf + df;
        for (int dt = 0; dt < kt; ++dt) {
          const int st_j = j * st - pt + dt;
          double* dst = row + (static_cast<size_t>(df) * kt + dt) * c;
          if (sf_i < 0 || sf_i >= f || st_j < 0 || st_j >= t) {
            std::memset(dst, 0, sizeof(double) * c);
          } else {
            const double* src =
                x + (static_cast<size_t>(sf_i) * t + st_j) * c;
            std::memcpy(dst, src, sizeof(double) * c);
          }
        }
      }
    }
  }
}

void col2im_acc(const double* col, int f, int t, int c, int kf, int kt,
                int sf, int st, int pf, int pt, int of, int ot, double* dx) {
  const size_t patch = static_cast<size_t>(kf) * kt * c;
  for (int i = 0; i < of; ++i) {
    for (int j = 0; j < ot; ++j) {
      const double* row = col + (static_cast<size_t>(i) * ot + j) * patch;
      for (int df = 0; df < kf; ++df) {
        const int sf_i = i * sf - pf + df;
        if (sf_i < 0 || sf_i >= f) continue;
        for (int dt = 0; dt < kt; ++dt) {
          const int st_j = j * st - pt + dt;
          if (st_j < 0 || st_j >= t) continue;
          const double* src = row + (static_cast<size_t>(df) * kt + dt) * c;
          double* dst = dx + (static_cast<size_t>(sf_i) * t + st_j) * c;
          for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
      }
    }
  }
}

}  // namespace bandflow
