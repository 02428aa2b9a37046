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
#include "bandflow/model.hpp"

#include <cmath>
#include <stdexcept>

#include "bandflow/dsp.hpp"
#include "json.hpp"

namespace bandflow {
namespace {

constexpr double kBlockInitStd = 0.02;
constexpr double kTimeScale = 1000.0;

double fan_in_std(long fan_in) { return std::sqrt(1.0 / fan_in); }

Tensor sinusoid_of(double value, int dim) {
  Tensor out({dim});
  for (int i = 0; i < dim / 2; ++i) {
    const double freq =
        std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
    out.data()[2 * i] = std::sin(value * freq);
    out.data()[2 * i + 1] = std::cos(value * freq);
  }
  return out;
}

}  // namespace

VfeConfig VfeConfig::tiny() {
  VfeConfig cfg;
  cfg.d_cond = 16;
  cfg.base_channels = 8;
  cfg.stage_depths = {1, 1, 1, 1};
  cfg.bottleneck_depth = 1;
  return cfg;
}

bool operator==(const VfeConfig& a, const VfeConfig& b) {
  return a.gen_bins == b.gen_bins && a.min_cutoff_bins == b.min_cutoff_bins &&
         a.d_cond == b.d_cond && a.base_channels == b.base_channels &&
         a.stage_depths == b.stage_depths &&
         a.bottleneck_depth == b.bottleneck_depth &&
         a.fe_pool_bins == b.fe_pool_bins && a.dw_kernel == b.dw_kernel &&
         a.expansion == b.expansion;
}

std::string config_to_json(const VfeConfig& cfg) {
  nlohmann::json j;
  j["gen_bins"] = cfg.gen_bins;
  j["min_cutoff_bins"] = cfg.min_cutoff_bins;
  j["d_cond"] = cfg.d_cond;
  j["base_channels"] = cfg.base_channels;
  j["stage_depths"] = cfg.stage_depths;
  j["bottleneck_depth"] = cfg.bottleneck_depth;
  j["fe_pool_bins"] = cfg.fe_pool_bins;
  j["dw_kernel"] = cfg.dw_kernel;
  j["expansion"] = cfg.expansion;
  return j.dump();
}

VfeConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  VfeConfig cfg;
  j.at("gen_bins").get_to(cfg.gen_bins);
  j.at("min_cutoff_bins").get_to(cfg.min_cutoff_bins);
  j.at("d_cond").get_to(cfg.d_cond);
  j.at("base_channels").get_to(cfg.base_channels);
  j.at("stage_depths").get_to(cfg.stage_depths);
  j.at("bottleneck_depth").get_to(cfg.bottleneck_depth);
  j.at("fe_pool_bins").get_to(cfg.fe_pool_bins);
  j.at("dw_kernel").get_to(cfg.dw_kernel);
  j.at("expansion").get_to(cfg.expansion);
  return cfg;
}

Tensor freq_positional_embedding(int num_bins, int dim) {
  if (dim % 2 != 0) {
    throw std::invalid_argument("freq_positional_embedding: dim must be even");
  }
  Tensor out({num_bins, dim});
  for (int k = 0; k < num_bins; ++k) {
    for (int i = 0; i < dim / 2; ++i) {
      const double freq =
          std::pow(10000.0, -2.0 * i / static_cast<double>(dim));
      out.data()[static_cast<long>(k) * dim + 2 * i] = std::sin(k * freq);
      out.data()[static_cast<long>(k) * dim + 2 * i + 1] = std::cos(k * freq);
    }
  }
  return out;
}

Var ParamStore::insert(const std::string& name, Tensor value) {
  if (index_.count(name) != 0) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  Var v = param(std::move(value));
  index_[name] = items_.size();
  items_.emplace_back(name, v);
  return v;
}

Var ParamStore::create_normal(const std::string& name,
                              const std::vector<int>& shape, double stddev,
                              Rng& rng) {
  return insert(name, Tensor::randn(shape, rng, stddev));
}

Var ParamStore::create_fill(const std::string& name,
                            const std::vector<int>& shape, double value) {
  Tensor t(shape);
  t.fill(value);
  return insert(name, std::move(t));
}

const Var& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::invalid_argument("unknown parameter: " + name);
  }
  return items_[it->second].second;
}

long ParamStore::count_matching(const std::string& prefix) const {
  long total = 0;
  for (const auto& [name, v] : items_) {
    if (name.rfind(prefix, 0) == 0) total += v->value.numel();
  }
  return total;
}

long ParamStore::count_total() const {
  long total = 0;
  for (const auto& [name, v] : items_) total += v->value.numel();
  return total;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : items_) {
    if (v->has_grad()) v->grad.fill(0.0);
  }
}

Model::Model(const VfeConfig& cfg, uint64_t seed)
    : cfg_(cfg), pos_table_(freq_positional_embedding(kBins, cfg.d_cond)) {
  Rng rng(mix_seed(seed, 0x6d6f64656c, 0, 0));
  build(rng);
}

void Model::build(Rng& rng) {
  const int d = cfg_.d_cond;
  const int c0 = cfg_.stage_channels(0);
  const int c3 = cfg_.stage_channels(3);

  // Feature encoder: 4 conv layers over the low band, frequency strides
  // {1,2,2,2}, then adaptive pooling to a fixed-size frame vector.
  int in_ch = 2;
  for (int l = 0; l < 4; ++l) {
    const int out_ch = cfg_.stage_channels(l);
    const std::string p = "fe.conv" + std::to_string(l + 1);
    store_.create_normal(p + ".w", {3, 3, in_ch, out_ch},
                         fan_in_std(9L * in_ch), rng);
    store_.create_fill(p + ".b", {out_ch}, 0.0);
    store_.create_fill("fe.ln" + std::to_string(l + 1) + ".g", {out_ch}, 1.0);
    store_.create_fill("fe.ln" + std::to_string(l + 1) + ".b", {out_ch}, 0.0);
    in_ch = out_ch;
  }
  store_.create_normal("fe.plf.w", {d, c0}, fan_in_std(d), rng);
  store_.create_fill("fe.plf.b", {c0}, 0.0);
  store_.create_normal("fe.esr.w", {d, c0}, fan_in_std(d), rng);
  store_.create_fill("fe.esr.b", {c0}, 0.0);
  const int pooled = cfg_.fe_pool_bins * c3;
  store_.create_normal("fe.proj.w", {pooled, d}, fan_in_std(pooled), rng);
  store_.create_fill("fe.proj.b", {d}, 0.0);
  store_.create_fill("fe.out_ln.g", {d}, 1.0);
  store_.create_fill("fe.out_ln.b", {d}, 0.0);

  // Conditioning: FiLM generator (identity at init), time MLP, sampling-rate
  // embedding (shared with the feature encoder), null embedding.
  store_.create_fill("vfe.film.w", {d, 2 * d}, 0.0);
  store_.create_fill("vfe.film.b", {2 * d}, 0.0);
  store_.create_normal("vfe.time.w1", {d, d}, fan_in_std(d), rng);
  store_.create_fill("vfe.time.b1", {d}, 0.0);
  store_.create_normal("vfe.time.w2", {d, d}, fan_in_std(d), rng);
  store_.create_fill("vfe.time.b2", {d}, 0.0);
  store_.create_normal("vfe.sr_embed",
                       {static_cast<int>(kSupportedRates.size()), d},
                       kBlockInitStd, rng);
  store_.create_normal("vfe.null", {d}, kBlockInitStd, rng);

  auto make_block = [&](const std::string& prefix, int ch) {
    const int k = cfg_.dw_kernel;
    const int ex = cfg_.expansion * ch;
    store_.create_normal(prefix + ".dw_w", {k, k, ch}, kBlockInitStd, rng);
    store_.create_fill(prefix + ".dw_b", {ch}, 0.0);
    store_.create_fill(prefix + ".ln_g", {ch}, 1.0);
    store_.create_fill(prefix + ".ln_b", {ch}, 0.0);
    store_.create_normal(prefix + ".emb_w", {d, ch}, kBlockInitStd, rng);
    store_.create_fill(prefix + ".emb_b", {ch}, 0.0);
    store_.create_normal(prefix + ".pw1_w", {ch, ex}, kBlockInitStd, rng);
    store_.create_fill(prefix + ".pw1_b", {ex}, 0.0);
    store_.create_fill(prefix + ".grn_g", {ex}, 0.0);
    store_.create_fill(prefix + ".grn_b", {ex}, 0.0);
    store_.create_normal(prefix + ".pw2_w", {ex, ch}, kBlockInitStd, rng);
    store_.create_fill(prefix + ".pw2_b", {ch}, 0.0);
  };

  store_.create_normal("vfe.stem.w", {3, 3, d + 2, c0},
                       fan_in_std(9L * (d + 2)), rng);
  store_.create_fill("vfe.stem.b", {c0}, 0.0);

  for (int s = 0; s < 4; ++s) {
    const int ch = cfg_.stage_channels(s);
    for (int k = 0; k < cfg_.stage_depths[s]; ++k) {
      make_block("vfe.enc" + std::to_string(s) + ".blk" + std::to_string(k),
                 ch);
    }
    if (s < 3) {
      store_.create_normal("vfe.down" + std::to_string(s) + ".w",
                           {2, 2, ch, 2 * ch}, fan_in_std(4L * ch), rng);
      store_.create_fill("vfe.down" + std::to_string(s) + ".b", {2 * ch},
                         0.0);
    }
  }
  for (int k = 0; k < cfg_.bottleneck_depth; ++k) {
    make_block("vfe.mid.blk" + std::to_string(k), c3);
  }
  for (int s = 3; s >= 0; --s) {
    const int ch = cfg_.stage_channels(s);
    for (int k = 0; k < cfg_.stage_depths[s]; ++k) {
      make_block("vfe.dec" + std::to_string(s) + ".blk" + std::to_string(k),
                 ch);
    }
    if (s > 0) {
      // Upsample into the next (shallower) stage, then fuse with its skip.
      store_.create_normal("vfe.up" + std::to_string(s - 1) + ".w",
                           {ch, 2, 2, ch / 2}, fan_in_std(ch), rng);
      store_.create_fill("vfe.up" + std::to_string(s - 1) + ".b", {ch / 2},
                         0.0);
      store_.create_normal("vfe.fuse" + std::to_string(s - 1) + ".w",
                           {ch, ch / 2}, fan_in_std(ch), rng);
      store_.create_fill("vfe.fuse" + std::to_string(s - 1) + ".b", {ch / 2},
                         0.0);
    }
  }
  store_.create_fill("vfe.head.ln_g", {c0}, 1.0);
  store_.create_fill("vfe.head.ln_b", {c0}, 0.0);
  store_.create_normal("vfe.head.w", {3, 3, c0, 2}, fan_in_std(9L * c0), rng);
  store_.create_fill("vfe.head.b", {2}, 0.0);
}

Var Model::block(const Var& x, const Var& g, const std::string& prefix) const {
  Var h = dwconv7(x, store_.get(prefix + ".dw_w"),
                  store_.get(prefix + ".dw_b"));
  h = layernorm(h, store_.get(prefix + ".ln_g"),
                store_.get(prefix + ".ln_b"));
  h = add_vec_c(h, linear(g, store_.get(prefix + ".emb_w"),
                          store_.get(prefix + ".emb_b")));
  h = linear(h, store_.get(prefix + ".pw1_w"), store_.get(prefix + ".pw1_b"));
  h = gelu(h);
  h = grn(h, store_.get(prefix + ".grn_g"), store_.get(prefix + ".grn_b"));
  h = linear(h, store_.get(prefix + ".pw2_w"), store_.get(prefix + ".pw2_b"));
  return add(x, h);
}

Var Model::time_embedding(double t) const {
  Var e = constant(sinusoid_of(t * kTimeScale, cfg_.d_cond));
  e = linear(e, store_.get("vfe.time.w1"), store_.get("vfe.time.b1"));
  e = gelu(e);
  return linear(e, store_.get("vfe.time.w2"), store_.get("vfe.time.b2"));
}

Var Model::feature_encode(const Var& x_l, int rate_idx) const {
  if (x_l->value.rank() != 3 || x_l->value.shape()[2] != 2) {
    throw std::invalid_argument("feature_encode: expected [F1,T,2] input");
  }
  const int f1 = x_l->value.shape()[0];
  if (f1 < cfg_.min_cutoff_bins) {
    throw std::invalid_argument(
        "feature_encode: cutoff below the minimum supported band (" +
        std::to_string(f1) + " < " + std::to_string(cfg_.min_cutoff_bins) +
        ")");
  }
  Tensor p_lf({f1, cfg_.d_cond});
  std::copy_n(pos_table_.data(), p_lf.numel(), p_lf.data());

  Var h = conv2d(x_l, store_.get("fe.conv1.w"), store_.get("fe.conv1.b"), 1,
                 1, 1, 1);
  h = layernorm(h, store_.get("fe.ln1.g"), store_.get("fe.ln1.b"));
  h = add_rows_fc(h, linear(constant(std::move(p_lf)),
                            store_.get("fe.plf.w"), store_.get("fe.plf.b")));
  Var e_sr = select_row(store_.get("vfe.sr_embed"), rate_idx);
  h = add_vec_c(h, linear(e_sr, store_.get("fe.esr.w"),
                          store_.get("fe.esr.b")));
  h = gelu(h);
  for (int l = 2; l <= 4; ++l) {
    const std::string n = std::to_string(l);
    h = conv2d(h, store_.get("fe.conv" + n + ".w"),
               store_.get("fe.conv" + n + ".b"), 2, 1, 1, 1);
    h = layernorm(h, store_.get("fe.ln" + n + ".g"),
                  store_.get("fe.ln" + n + ".b"));
    h = gelu(h);
  }
  h = avgpool_freq(h, cfg_.fe_pool_bins);
  h = flatten_freq(h);
  h = linear(h, store_.get("fe.proj.w"), store_.get("fe.proj.b"));
  return layernorm(h, store_.get("fe.out_ln.g"), store_.get("fe.out_ln.b"));
}

Var Model::null_condition(int frames) const {
  return broadcast_row(store_.get("vfe.null"), frames);
}

Var Model::assemble_condition(const Var& c_lf) const {
  Tensor p_hf({cfg_.gen_bins, cfg_.d_cond});
  std::copy_n(
      pos_table_.data() + static_cast<long>(cfg_.min_cutoff_bins) * cfg_.d_cond,
      p_hf.numel(), p_hf.data());
  Var gb = linear(constant(std::move(p_hf)), store_.get("vfe.film.w"),
                  store_.get("vfe.film.b"));
  return film_freq(c_lf, gb);
}

Var Model::vfe_forward(double t, const Var& x_t, const Var& cond_map,
                       int rate_idx) const {
  const auto& xs = x_t->value.shape();
  if (x_t->value.rank() != 3 || xs[0] != cfg_.gen_bins || xs[2] != 2) {
    throw std::invalid_argument("vfe_forward: expected [gen_bins,T,2] input");
  }
  const int frames = xs[1];
  Var g = add(time_embedding(t),
              select_row(store_.get("vfe.sr_embed"), rate_idx));

  Var h = concat_c(x_t, cond_map);
  const int padded = ((frames + 7) / 8) * 8;
  h = pad_t(h, padded);
  h = conv2d(h, store_.get("vfe.stem.w"), store_.get("vfe.stem.b"), 1, 1, 1,
             1);

  std::vector<Var> skips;
  for (int s = 0; s < 4; ++s) {
    for (int k = 0; k < cfg_.stage_depths[s]; ++k) {
      h = block(h, g, "vfe.enc" + std::to_string(s) + ".blk" +
                          std::to_string(k));
    }
    if (s < 3) {
      skips.push_back(h);
      h = conv2d(h, store_.get("vfe.down" + std::to_string(s) + ".w"),
                 store_.get("vfe.down" + std::to_string(s) + ".b"), 2, 2, 0,
                 0);
    }
  }
  for (int k = 0; k < cfg_.bottleneck_depth; ++k) {
    h = block(h, g, "vfe.mid.blk" + std::to_string(k));
  }
  for (int s = 3; s >= 0; --s) {
    for (int k = 0; k < cfg_.stage_depths[s]; ++k) {
      h = block(h, g, "vfe.dec" + std::to_string(s) + ".blk" +
                          std::to_string(k));
    }
    if (s > 0) {
      h = tconv2x2(h, store_.get("vfe.up" + std::to_string(s - 1) + ".w"),
                   store_.get("vfe.up" + std::to_string(s - 1) + ".b"));
      h = concat_c(h, skips[s - 1]);
      h = linear(h, store_.get("vfe.fuse" + std::to_string(s - 1) + ".w"),
                 store_.get("vfe.fuse" + std::to_string(s - 1) + ".b"));
    }
  }
  h = layernorm(h, store_.get("vfe.head.ln_g"), store_.get("vfe.head.ln_b"));
  h = conv2d(h, store_.get("vfe.head.w"), store_.get("vfe.head.b"), 1, 1, 1,
             1);
  return crop_t(h, frames);
}

}  // namespace bandflow
