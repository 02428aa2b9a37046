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
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bandflow/common.hpp"
#include "bandflow/flow.hpp"
#include "bandflow/rng.hpp"
#include "doctest.h"

using namespace bandflow;

namespace {

Tensor random_grid(Rng& rng, const std::vector<int>& shape) {
  return Tensor::randn(shape, rng);
}

}  // namespace

TEST_CASE("path endpoints interpolate noise and data") {
  Rng rng(41);
  const PathConfig cfg;
  const Tensor x_h = random_grid(rng, {6, 5, 2});
  const Tensor x_0 = random_grid(rng, {6, 5, 2});

  const Tensor at0 = sample_path(x_h, x_0, 0.0, cfg);
  const Tensor at1 = sample_path(x_h, x_0, 1.0, cfg);
  for (size_t i = 0; i < at0.numel(); ++i) {
    CHECK(at0.data()[i] == doctest::Approx(x_0.data()[i]).epsilon(1e-12));
    // At t=1 the residual noise scale is exactly sigma_min.
    CHECK(at1.data()[i] ==
          doctest::Approx(x_h.data()[i] + cfg.sigma_min * x_0.data()[i])
              .epsilon(1e-12));
  }
}

TEST_CASE("target field is the time derivative of the path") {
  Rng rng(42);
  const PathConfig cfg;
  const double h = 1e-6;
  double max_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x_h = random_grid(rng, {4, 3, 2});
    const Tensor x_0 = random_grid(rng, {4, 3, 2});
    const double t = 0.1 + 0.8 * rng.uniform();
    const Tensor lo = sample_path(x_h, x_0, t - h, cfg);
    const Tensor hi = sample_path(x_h, x_0, t + h, cfg);
    const Tensor u = target_field(x_h, x_0, cfg);
    for (size_t i = 0; i < u.numel(); ++i) {
      const double fd = (hi.data()[i] - lo.data()[i]) / (2.0 * h);
      max_dev = std::max(max_dev, std::abs(fd - u.data()[i]));
    }
  }
  CHECK(max_dev < 1e-6);
}

TEST_CASE("cfm loss basics") {
  Rng rng(43);
  const Tensor u = random_grid(rng, {3, 4, 2});
  CHECK(cfm_loss(u, u) == 0.0);

  Tensor v = u;
  for (size_t i = 0; i < v.numel(); ++i) v.data()[i] += 0.5;
  CHECK(cfm_loss(v, u) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("cfg combine extrapolates and short-circuits at one") {
  Rng rng(44);
  const Tensor vc = random_grid(rng, {2, 3, 2});
  const Tensor vu = random_grid(rng, {2, 3, 2});

  const Tensor mix = cfg_combine(vc, vu, 1.5);
  for (size_t i = 0; i < mix.numel(); ++i) {
    const double want =
        vu.data()[i] + 1.5 * (vc.data()[i] - vu.data()[i]);
    CHECK(mix.data()[i] == doctest::Approx(want).epsilon(1e-12));
  }

  const Tensor same = cfg_combine(vc, vu, 1.0);
  for (size_t i = 0; i < same.numel(); ++i) {
    CHECK(same.data()[i] == vc.data()[i]);  // bitwise
  }
}

TEST_CASE("midpoint solver matches the closed form for dx/dt = x") {
  const FieldFn field = [](double, const Tensor& x) { return x; };
  Tensor one({1});
  one.fill(1.0);

  // One midpoint step of size h multiplies by (1 + h + h^2/2).
  const Tensor four = midpoint_solve(field, one, 4);
  const double growth = 1.0 + 0.25 + 0.25 * 0.25 / 2.0;  // 1.28125
  CHECK(four.data()[0] ==
        doctest::Approx(std::pow(growth, 4)).epsilon(1e-12));
  // 1.28125^4 = 2825761/1048576 exactly.
  CHECK(std::pow(growth, 4) ==
        doctest::Approx(2825761.0 / 1048576.0).epsilon(1e-15));
}

TEST_CASE("midpoint solver is second order") {
  const FieldFn field = [](double, const Tensor& x) { return x; };
  Tensor one({1});
  one.fill(1.0);
  const double e = std::exp(1.0);
  const double err4 = std::abs(midpoint_solve(field, one, 4).data()[0] - e);
  const double err8 = std::abs(midpoint_solve(field, one, 8).data()[0] - e);
  const double ratio = err4 / err8;
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("midpoint solver integrates time-dependent fields") {
  // dx/dt = 2t has exact solution x(1) = x(0) + 1, and the midpoint rule
  // integrates polynomials of degree <= 2 exactly.
  const FieldFn field = [](double t, const Tensor& x) {
    Tensor out(x.shape());
    out.fill(2.0 * t);
    return out;
  };
  Tensor x0({2});
  x0.fill(3.0);
  const Tensor x1 = midpoint_solve(field, x0, 5);
  CHECK(x1.data()[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(x1.data()[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("midpoint solver rejects bad inputs and non-finite fields") {
  const FieldFn field = [](double, const Tensor& x) { return x; };
  Tensor one({1});
  one.fill(1.0);
  CHECK_THROWS_AS(midpoint_solve(field, one, 0), std::invalid_argument);

  const FieldFn bad = [](double t, const Tensor& x) {
    Tensor out(x.shape());
    out.fill(t < 0.5 ? 1.0 : std::nan(""));
    return out;
  };
  CHECK_THROWS_AS(midpoint_solve(bad, one, 4), NumericError);
}

TEST_CASE("path and field validate shapes") {
  Rng rng(45);
  const PathConfig cfg;
  const Tensor a = random_grid(rng, {2, 2, 2});
  const Tensor b = random_grid(rng, {3, 2, 2});
  CHECK_THROWS_AS(sample_path(a, b, 0.5, cfg), std::invalid_argument);
  CHECK_THROWS_AS(target_field(a, b, cfg), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(a, a, -0.1, cfg), std::invalid_argument);
  CHECK_THROWS_AS(sample_path(a, a, 1.1, cfg), std::invalid_argument);
}
