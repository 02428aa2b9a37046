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
#include <cstring>
#include <vector>

#include "bandflow/flow.hpp"
#include "bandflow/model.hpp"
#include "bandflow/rng.hpp"
#include "bandflow/tape.hpp"
#include "doctest.h"

namespace bf = bandflow;

namespace {

bool all_finite(const bf::Tensor& t) {
  for (int64_t i = 0; i < t.numel(); ++i) {
    if (!std::isfinite(t.data()[i])) return false;
  }
  return true;
}

bool same_bits(const bf::Tensor& a, const bf::Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<size_t>(a.numel())) == 0;
}

double l2_diff(const bf::Tensor& a, const bf::Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double s = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("positional embedding rows follow the sinusoidal ladder") {
  const int dim = 384;
  bf::Tensor table = bf::freq_positional_embedding(512, dim);
  REQUIRE(table.shape() == std::vector<int>{512, dim});

  // Row 0: every sine slot is 0, every cosine slot is 1.
  for (int i = 0; i < dim; i += 2) {
    CHECK(table.at(0, i) == 0.0);
    CHECK(table.at(0, i + 1) == 1.0);
  }

  // Spot-check the closed form at a few (row, pair) positions.
  for (int k : {1, 17, 300}) {
    for (int pair : {0, 50, 191}) {
      const double freq = std::pow(10000.0, -2.0 * pair / dim);
      CHECK(table.at(k, 2 * pair) ==
            doctest::Approx(std::sin(k * freq)).epsilon(1e-12));
      CHECK(table.at(k, 2 * pair + 1) ==
            doctest::Approx(std::cos(k * freq)).epsilon(1e-12));
    }
  }

  // Bounded and pairwise distinct over the full band.
  for (int64_t i = 0; i < table.numel(); ++i) {
    CHECK(std::abs(table.data()[i]) <= 1.0);
  }
  for (int a = 0; a < 512; ++a) {
    for (int b = a + 1; b < 512; ++b) {
      if (std::memcmp(table.data() + static_cast<size_t>(a) * dim,
                      table.data() + static_cast<size_t>(b) * dim,
                      sizeof(double) * dim) == 0) {
        FAIL("duplicate positional rows ", a, " and ", b);
      }
    }
  }
}

TEST_CASE("positional embedding rejects odd dimensions") {
  CHECK_THROWS_AS(bf::freq_positional_embedding(8, 3), std::invalid_argument);
}

TEST_CASE("parameter counts stay on the published budget") {
  bf::Model full(bf::VfeConfig{}, 1);
  const long fe = full.count_feature_encoder();
  const long vfe = full.count_vfe();
  const long total = full.count_total();

  // Exact counts are pinned; architecture edits must update them.
  CHECK(fe == 4744416);
  CHECK(vfe == 47612834);
  CHECK(total == 52357250);
  CHECK(fe + vfe == total);

  CHECK(std::abs(fe - 5.0e6) <= 0.15 * 5.0e6);
  CHECK(std::abs(vfe - 52.0e6) <= 0.15 * 52.0e6);
  CHECK(std::abs(total - 57.0e6) <= 0.15 * 57.0e6);

  CHECK(full.null_condition(3)->value.shape() == std::vector<int>{3, 384});
}

TEST_CASE("tiny config counts are frozen") {
  bf::Model tiny(bf::VfeConfig::tiny(), 1);
  CHECK(tiny.count_total() == 200898);
  CHECK(tiny.count_feature_encoder() + tiny.count_vfe() ==
        tiny.count_total());
}

TEST_CASE("config json round trip preserves every field") {
  for (const bf::VfeConfig& cfg : {bf::VfeConfig{}, bf::VfeConfig::tiny()}) {
    bf::VfeConfig back = bf::config_from_json(bf::config_to_json(cfg));
    CHECK(back == cfg);
  }
  CHECK_THROWS(bf::config_from_json("not json"));
  CHECK_THROWS(bf::config_from_json("{\"gen_bins\": 432}"));
}

TEST_CASE("feature encoder maps every supported cutoff to T x D") {
  bf::Model model(bf::VfeConfig::tiny(), 3);
  bf::NoGradGuard ng;
  bf::Rng rng(11);
  const int frames = 12;
  const int cutoffs[4] = {80, 128, 170, 256};
  for (int r = 0; r < 4; ++r) {
    bf::Tensor x_l = bf::Tensor::randn({cutoffs[r], frames, 2}, rng, 0.5);
    bf::Var c = model.feature_encode(bf::constant(std::move(x_l)), r);
    CHECK(c->value.shape() == std::vector<int>{frames, 16});
    CHECK(all_finite(c->value));
  }
  // Off-grid cutoffs above the minimum band are accepted at inference.
  bf::Tensor odd = bf::Tensor::randn({93, frames, 2}, rng, 0.5);
  CHECK(model.feature_encode(bf::constant(std::move(odd)), 0)->value.shape() ==
        std::vector<int>{frames, 16});

  bf::Tensor low = bf::Tensor::randn({64, frames, 2}, rng, 0.5);
  CHECK_THROWS_AS(model.feature_encode(bf::constant(std::move(low)), 0),
                  std::invalid_argument);
}

TEST_CASE("feature encoder is local in time") {
  bf::Model model(bf::VfeConfig::tiny(), 5);
  bf::NoGradGuard ng;
  const int frames = 32;
  const int hit = 16;

  bf::Tensor zeros({80, frames, 2});
  bf::Tensor probe({80, frames, 2});
  for (int f = 0; f < 80; ++f) {
    probe.at(f, hit, 0) = 1.0;
    probe.at(f, hit, 1) = -0.5;
  }
  bf::Tensor base = model.feature_encode(bf::constant(std::move(zeros)), 0)
                        ->value;
  bf::Tensor resp = model.feature_encode(bf::constant(std::move(probe)), 0)
                        ->value;

  // Four temporal 3-taps give a receptive field of +/-4 frames.
  const int d = base.shape()[1];
  double inside = 0.0;
  for (int t = 0; t < frames; ++t) {
    double row_diff = 0.0;
    for (int i = 0; i < d; ++i) {
      row_diff += std::abs(resp.at(t, i) - base.at(t, i));
    }
    if (std::abs(t - hit) > 4) {
      CHECK(row_diff == 0.0);
    } else if (t == hit) {
      inside = row_diff;
    }
  }
  CHECK(inside > 0.0);
}

TEST_CASE("condition assembly is the identity at initialization") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 9);
  bf::NoGradGuard ng;
  bf::Rng rng(21);
  const int frames = 5;
  bf::Tensor c_lf = bf::Tensor::randn({frames, cfg.d_cond}, rng, 1.0);
  bf::Tensor keep = c_lf;
  bf::Var out = model.assemble_condition(bf::constant(std::move(c_lf)));
  REQUIRE(out->value.shape() ==
          std::vector<int>{cfg.gen_bins, frames, cfg.d_cond});
  for (int f : {0, 113, 431}) {
    for (int t = 0; t < frames; ++t) {
      for (int i = 0; i < cfg.d_cond; ++i) {
        CHECK(out->value.at(f, t, i) == keep.at(t, i));
      }
    }
  }
}

TEST_CASE("condition assembly separates frequency rows once FiLM is nonzero") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 9);
  bf::NoGradGuard ng;
  bf::Rng rng(22);
  bf::Var film_w = model.store().get("vfe.film.w");
  for (int64_t i = 0; i < film_w->value.numel(); ++i) {
    film_w->value.data()[i] = 0.1 * rng.normal();
  }

  bf::Tensor ones({3, cfg.d_cond});
  for (int64_t i = 0; i < ones.numel(); ++i) ones.data()[i] = 1.0;
  bf::Tensor out = model.assemble_condition(bf::constant(std::move(ones)))
                       ->value;
  double diff = 0.0;
  for (int t = 0; t < 3; ++t) {
    for (int i = 0; i < cfg.d_cond; ++i) {
      diff += std::abs(out.at(0, t, i) - out.at(1, t, i));
    }
  }
  CHECK(diff > 0.0);
}

TEST_CASE("null condition broadcasts one learnable row") {
  bf::Model model(bf::VfeConfig::tiny(), 13);
  bf::Var null7 = model.null_condition(7);
  REQUIRE(null7->value.shape() == std::vector<int>{7, 16});
  const bf::Tensor& vec = model.store().get("vfe.null")->value;
  for (int t = 0; t < 7; ++t) {
    for (int i = 0; i < 16; ++i) {
      CHECK(null7->value.at(t, i) == vec.data()[i]);
    }
  }
}

TEST_CASE("vector field output matches the input grid shape") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 17);
  bf::NoGradGuard ng;
  bf::Rng rng(31);
  // 20 exercises the internal pad-to-multiple-of-8 path.
  for (int frames : {16, 32, 64, 20}) {
    bf::Tensor x_t = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 1.0);
    bf::Var cond = model.assemble_condition(model.null_condition(frames));
    bf::Var v = model.vfe_forward(0.5, bf::constant(std::move(x_t)), cond, 1);
    CHECK(v->value.shape() == std::vector<int>{cfg.gen_bins, frames, 2});
    CHECK(all_finite(v->value));
  }
}

TEST_CASE("seeded construction and forward are bit reproducible") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model a(cfg, 123);
  bf::Model b(cfg, 123);
  REQUIRE(a.store().items().size() == b.store().items().size());
  for (size_t i = 0; i < a.store().items().size(); ++i) {
    CHECK(a.store().items()[i].first == b.store().items()[i].first);
    CHECK(same_bits(a.store().items()[i].second->value,
                    b.store().items()[i].second->value));
  }

  bf::NoGradGuard ng;
  bf::Rng rng(41);
  bf::Tensor x_l = bf::Tensor::randn({80, 16, 2}, rng, 0.5);
  bf::Tensor x_t = bf::Tensor::randn({cfg.gen_bins, 16, 2}, rng, 1.0);
  auto run = [&](bf::Model& m) {
    bf::Var c = m.feature_encode(bf::constant(x_l), 0);
    bf::Var cond = m.assemble_condition(c);
    return m.vfe_forward(0.25, bf::constant(x_t), cond, 0)->value;
  };
  bf::Tensor va = run(a);
  bf::Tensor va2 = run(a);
  bf::Tensor vb = run(b);
  CHECK(same_bits(va, va2));
  CHECK(same_bits(va, vb));
}

TEST_CASE("time, conditioning, and null toggles all move the field") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 19);
  bf::NoGradGuard ng;
  bf::Rng rng(51);
  const int frames = 16;
  bf::Tensor x_l = bf::Tensor::randn({80, frames, 2}, rng, 0.5);
  bf::Tensor x_t = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 1.0);

  bf::Var c_lf = model.feature_encode(bf::constant(x_l), 0);
  bf::Var cond = model.assemble_condition(c_lf);
  bf::Var cond_null = model.assemble_condition(model.null_condition(frames));

  bf::Tensor v0 = model.vfe_forward(0.0, bf::constant(x_t), cond, 0)->value;
  bf::Tensor v1 = model.vfe_forward(1.0, bf::constant(x_t), cond, 0)->value;
  CHECK(l2_diff(v0, v1) > 0.0);

  bf::Tensor vn =
      model.vfe_forward(0.0, bf::constant(x_t), cond_null, 0)->value;
  CHECK(l2_diff(v0, vn) > 0.0);

  // Perturb one conditioning frame; the output Jacobian must not vanish.
  bf::Tensor c_pert = c_lf->value;
  for (int i = 0; i < cfg.d_cond; ++i) c_pert.at(frames / 2, i) += 0.05;
  bf::Var cond_pert =
      model.assemble_condition(bf::constant(std::move(c_pert)));
  bf::Tensor vp =
      model.vfe_forward(0.0, bf::constant(x_t), cond_pert, 0)->value;
  CHECK(l2_diff(v0, vp) > 0.0);
}

TEST_CASE("analytic gradients match finite differences through the stack") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 29);
  bf::Rng rng(61);
  const int frames = 8;
  const double t = 0.37;
  bf::PathConfig path;

  bf::Tensor x_l = bf::Tensor::randn({80, frames, 2}, rng, 0.5);
  bf::Tensor x_h = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 0.8);
  bf::Tensor x0 = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 1.0);
  bf::Tensor x_t = bf::sample_path(x_h, x0, t, path);
  bf::Tensor u = bf::target_field(x_h, x0, path);

  auto loss_value = [&]() {
    bf::NoGradGuard ng;
    bf::Var c = model.feature_encode(bf::constant(x_l), 0);
    bf::Var v =
        model.vfe_forward(t, bf::constant(x_t), model.assemble_condition(c), 0);
    return bf::mse_to(v, u)->value.data()[0];
  };

  model.store().zero_grad();
  {
    bf::Var c = model.feature_encode(bf::constant(x_l), 0);
    bf::Var v =
        model.vfe_forward(t, bf::constant(x_t), model.assemble_condition(c), 0);
    bf::backward(bf::mse_to(v, u));
  }

  const char* names[] = {"fe.conv1.w",       "fe.proj.w",
                         "fe.esr.w",         "vfe.stem.w",
                         "vfe.enc0.blk0.pw1_w", "vfe.mid.blk0.dw_w",
                         "vfe.film.w",       "vfe.time.w1",
                         "vfe.sr_embed",     "vfe.dec0.blk0.emb_w",
                         "vfe.head.w",       "vfe.up0.w"};
  const double h = 1e-3;
  for (const char* name : names) {
    CAPTURE(name);
    bf::Var p = model.store().get(name);
    const double analytic = p->has_grad() ? p->grad.data()[0] : 0.0;
    double* slot = p->value.data();
    const double saved = slot[0];
    slot[0] = saved + h;
    const double hi = loss_value();
    slot[0] = saved - h;
    const double lo = loss_value();
    slot[0] = saved;
    const double fd = (hi - lo) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(analytic)});
    CHECK(std::abs(fd - analytic) / scale < 1e-2);
  }
}

TEST_CASE("null embedding receives gradient when conditioning is dropped") {
  bf::VfeConfig cfg = bf::VfeConfig::tiny();
  bf::Model model(cfg, 37);
  bf::Rng rng(71);
  const int frames = 8;
  bf::Tensor x_t = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 1.0);
  bf::Tensor u = bf::Tensor::randn({cfg.gen_bins, frames, 2}, rng, 1.0);

  auto loss_value = [&]() {
    bf::NoGradGuard ng;
    bf::Var cond = model.assemble_condition(model.null_condition(frames));
    return bf::mse_to(model.vfe_forward(0.5, bf::constant(x_t), cond, 0), u)
        ->value.data()[0];
  };

  model.store().zero_grad();
  {
    bf::Var cond = model.assemble_condition(model.null_condition(frames));
    bf::backward(
        bf::mse_to(model.vfe_forward(0.5, bf::constant(x_t), cond, 0), u));
  }
  bf::Var null_vec = model.store().get("vfe.null");
  REQUIRE(null_vec->has_grad());
  const double analytic = null_vec->grad.data()[0];

  const double h = 1e-3;
  double* slot = null_vec->value.data();
  const double saved = slot[0];
  slot[0] = saved + h;
  const double hi = loss_value();
  slot[0] = saved - h;
  const double lo = loss_value();
  slot[0] = saved;
  const double fd = (hi - lo) / (2.0 * h);
  CHECK(std::abs(fd) > 0.0);
  const double scale = std::max({1.0, std::abs(fd), std::abs(analytic)});
  CHECK(std::abs(fd - analytic) / scale < 1e-2);
}
