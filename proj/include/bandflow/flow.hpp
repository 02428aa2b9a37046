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
#ifndef BANDFLOW_FLOW_HPP_
#define BANDFLOW_FLOW_HPP_

#include <functional>

#include "bandflow/tensor.hpp"

namespace bandflow {

struct PathConfig {
  double sigma_min = 0.1;
};

/// Linear interpolation path: t*x_h + (1 - (1 - sigma_min)*t)*x_0.
Tensor sample_path(const Tensor& x_h, const Tensor& x_0, double t,
                   const PathConfig& cfg);

/// Constant target field of the path above: x_h - (1 - sigma_min)*x_0.
Tensor target_field(const Tensor& x_h, const Tensor& x_0,
                    const PathConfig& cfg);

/// Mean over all elements of (v_pred - u_target)^2.
double cfm_loss(const Tensor& v_pred, const Tensor& u_target);

/// Classifier-free guidance: v_uncond + omega*(v_cond - v_uncond).
/// omega == 1 returns v_cond bitwise, so callers can skip the
/// unconditional evaluation entirely in that case.
Tensor cfg_combine(const Tensor& v_cond, const Tensor& v_uncond,
                   double omega);

using FieldFn = std::function<Tensor(double t, const Tensor& x)>;

/// Integrates dx/dt = field(t, x) from t=0 to t=1 with the explicit
/// midpoint rule on a uniform grid of `steps` steps.
Tensor midpoint_solve(const FieldFn& field, const Tensor& x_0, int steps);

}  // namespace bandflow

#endif  // BANDFLOW_FLOW_HPP_
