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
#ifndef BANDFLOW_KERNELS_HPP_
#define BANDFLOW_KERNELS_HPP_

namespace bandflow {

// Dense double-precision building blocks. All loops are sequential with a
// fixed accumulation order so results are bit-reproducible.

/// C[M,N] (+)= A[M,K] * B[K,N]
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
/// C[M,N] (+)= A[K,M]^T * B[K,N]
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
/// C[M,N] (+)= A[M,K] * B[N,K]^T
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);

inline int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

/// Unrolls kf*kt patches of x [F,T,C] (channels last, zero padded) into
/// col [oF*oT, kf*kt*C] for GEMM-based convolution.
void im2col(const double* x, int f, int t, int c, int kf, int kt, int sf,
            int st, int pf, int pt, int of, int ot, double* col);

/// Transpose of im2col: scatters col gradients back into dx [F,T,C].
void col2im_acc(const double* col, int f, int t, int c, int kf, int kt,
                int sf, int st, int pf, int pt, int of, int ot, double* dx);

}  // namespace bandflow

#endif  // BANDFLOW_KERNELS_HPP_
