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
#include "bandflow/flow.hpp"

#include <stdexcept>
#include <string>

#include "bandflow/common.hpp"

namespace bandflow {

Tensor sample_path(const Tensor& x_h, const Tensor& x_0, double t,
                   const PathConfig& cfg) {
  check_same_shape(x_h, x_0, "sample_path");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("sample_path: t outside [0,1]");
  const double sigma_t = 1.0 - (1.0 - cfg.sigma_min) * t;
  Tensor out(x_h.shape());
  const double* a = x_h.data();
  const double* b = x_0.data();
  double* o = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) o[i] = t * a[i] + sigma_t * b[i];
  return out;
}

Tensor target_field(const Tensor& x_h, const Tensor& x_0,
                    const PathConfig& cfg) {
  check_same_shape(x_h, x_0, "target_field");
  const double scale = 1.0 - cfg.sigma_min;
  Tensor out(x_h.shape());
  const double* a = x_h.data();
  const double* b = x_0.data();
  double* o = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) o[i] = a[i] - scale * b[i];
  return out;
}

double cfm_loss(const Tensor& v_pred, const Tensor& u_target) {
  check_same_shape(v_pred, u_target, "cfm_loss");
  const double* p = v_pred.data();
  const double* u = u_target.data();
  const long n = v_pred.numel();
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    const double d = p[i] - u[i];
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

Tensor cfg_combine(const Tensor& v_cond, const Tensor& v_uncond,
                   double omega) {
  check_same_shape(v_cond, v_uncond, "cfg_combine");
  if (omega < 0.0) throw std::invalid_argument("cfg_combine: omega must be >= 0");
  if (omega == 1.0) return v_cond;
  Tensor out(v_cond.shape());
  const double* c = v_cond.data();
  const double* u = v_uncond.data();
  double* o = out.data();
  const long n = out.numel();
  for (long i = 0; i < n; ++i) o[i] = u[i] + omega * (c[i] - u[i]);
  return out;
}

Tensor midpoint_solve(const FieldFn& field, const Tensor& x_0, int steps) {
  if (steps < 1) throw std::invalid_argument("midpoint_solve: steps must be >= 1");
  const double h = 1.0 / steps;
  Tensor x = x_0;
  const long n = x.numel();
  for (int s = 0; s < steps; ++s) {
    const double t = h * s;
    Tensor k1 = field(t, x);
    if (!k1.is_finite()) {
      throw NumericError("midpoint_solve: non-finite field at step " +
                         std::to_string(s) + " (first half)");
    }
    Tensor mid(x.shape());
    for (long i = 0; i < n; ++i) {
      mid.data()[i] = x.data()[i] + 0.5 * h * k1.data()[i];
    }
    Tensor k2 = field(t + 0.5 * h, mid);
    if (!k2.is_finite()) {
      throw NumericError("midpoint_solve: non-finite field at step " +
                         std::to_string(s) + " (midpoint)");
    }
    for (long i = 0; i < n; ++i) x.data()[i] += h * k2.data()[i];
  }
  return x;
}

}  // namespace bandflow
