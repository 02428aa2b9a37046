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
#ifndef BANDFLOW_TAPE_HPP_
#define BANDFLOW_TAPE_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "bandflow/tensor.hpp"

namespace bandflow {

// Eager reverse-mode autodiff. Ops run immediately and, while gradients are
// enabled, chain their inputs into a graph of shared nodes; backward() walks
// that graph once in reverse topological order. With gradients disabled the
// ops return bare value nodes, so intermediates free as references drop.

bool& grad_enabled();

struct NoGradGuard {
  NoGradGuard() : prev_(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backfn;  // pushes this->grad into parents

  Tensor& ensure_grad();
  bool has_grad() const { return grad.numel() == value.numel(); }
};

/// Non-learnable input node.
Var constant(Tensor value);
/// Learnable leaf node.
Var param(Tensor value);

/// Accumulates gradients of a scalar node into every reachable leaf.
void backward(const Var& loss);

// Differentiable ops. Spatial tensors are [F, T, C] channels-last.
Var add(const Var& a, const Var& b);
Var scale(const Var& a, double s);
/// Concat along the channel axis: [F,T,Ca] ++ [F,T,Cb] -> [F,T,Ca+Cb].
Var concat_c(const Var& a, const Var& b);
/// w is [kf, kt, Cin, Cout], bias [Cout].
Var conv2d(const Var& x, const Var& w, const Var& b, int sf, int st, int pf,
           int pt);
/// 2x2 stride-2 transposed conv; w is [Cin, 2, 2, Cout] -> doubles F and T.
Var tconv2x2(const Var& x, const Var& w, const Var& b);
/// 7x7 depthwise, same padding; w is [7, 7, C], bias [C].
Var dwconv7(const Var& x, const Var& w, const Var& b);
/// x [..., Din] * w [Din, Dout] + b [Dout]; applied over all positions.
Var linear(const Var& x, const Var& w, const Var& b);
/// Normalizes the trailing channel axis; gamma/beta [C].
Var layernorm(const Var& x, const Var& gamma, const Var& beta);
Var gelu(const Var& x);
/// Global response normalization over the spatial axes of [F,T,C].
Var grn(const Var& x, const Var& gamma, const Var& beta);
/// x [..., C] + v [C] broadcast over leading axes.
Var add_vec_c(const Var& x, const Var& v);
/// x [F,T,C] + r [F,C] broadcast over T.
Var add_rows_fc(const Var& x, const Var& r);
/// FiLM across frequency rows: c [T,D], gb [F,2D] (scale offsets first)
/// -> out[f,t,d] = c[t,d]*(1+gb[f,d]) + gb[f,D+d].
Var film_freq(const Var& c, const Var& gb);
/// Adaptive mean pooling of the frequency axis of [F,T,C] to out_f rows.
Var avgpool_freq(const Var& x, int out_f);
/// [P,T,C] -> [T,P*C] (frame-major feature vector).
Var flatten_freq(const Var& x);
/// v [D] -> [n,D] with identical rows.
Var broadcast_row(const Var& v, int n);
/// table [R,D] -> row [D].
Var select_row(const Var& table, int row);
/// Right-pads the T axis of [F,T,C] with zeros up to new_t.
Var pad_t(const Var& x, int new_t);
Var crop_t(const Var& x, int new_t);
/// Scalar node: mean over elements of (x - target)^2.
Var mse_to(const Var& x, const Tensor& target);

}  // namespace bandflow

#endif  // BANDFLOW_TAPE_HPP_
