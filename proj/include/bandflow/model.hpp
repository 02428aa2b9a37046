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
#ifndef BANDFLOW_MODEL_HPP_
#define BANDFLOW_MODEL_HPP_

#include <array>
#include <map>
#include <string>
#include <vector>

#include "bandflow/rng.hpp"
#include "bandflow/tape.hpp"
#include "bandflow/tensor.hpp"

namespace bandflow {

struct VfeConfig {
  int gen_bins = 432;
  int min_cutoff_bins = 80;
  int d_cond = 384;
  int base_channels = 96;
  std::array<int, 4> stage_depths{2, 2, 4, 2};
  int bottleneck_depth = 2;
  int fe_pool_bins = 4;
  // Fixed internals, recorded so checkpoints are self-describing.
  int dw_kernel = 7;
  int expansion = 4;

  int stage_channels(int stage) const { return base_channels << stage; }

  /// Reduced architecture for gradient checks and overfit runs.
  static VfeConfig tiny();
};

bool operator==(const VfeConfig& a, const VfeConfig& b);

std::string config_to_json(const VfeConfig& cfg);
VfeConfig config_from_json(const std::string& text);

/// Transformer-style sinusoidal table: row k holds interleaved
/// sin/cos(k / 10000^(2i/dim)).
Tensor freq_positional_embedding(int num_bins, int dim);

/// Ordered collection of learnable leaves; iteration order is creation
/// order, which fixes the optimizer and checkpoint layouts.
class ParamStore {
 public:
  Var create_normal(const std::string& name, const std::vector<int>& shape,
                    double stddev, Rng& rng);
  Var create_fill(const std::string& name, const std::vector<int>& shape,
                  double value);
  const Var& get(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& items() const {
    return items_;
  }
  long count_matching(const std::string& prefix) const;
  long count_total() const;
  void zero_grad();

 private:
  Var insert(const std::string& name, Tensor value);
  std::vector<std::pair<std::string, Var>> items_;
  std::map<std::string, size_t> index_;
};

/// The learnable stack: feature encoder, conditioning assembly, and the
/// ConvNeXt-V2 U-Net vector field estimator.
class Model {
 public:
  Model(const VfeConfig& cfg, uint64_t seed);

  const VfeConfig& config() const { return cfg_; }
  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  /// x_l: compressed low band [F1,T,2]; rate_idx indexes kSupportedRates.
  Var feature_encode(const Var& x_l, int rate_idx) const;

  /// Learnable null vector broadcast to [frames, D].
  Var null_condition(int frames) const;

  /// FiLM of c_lf [T,D] by per-frequency scale/shift from the high-band
  /// positional rows -> [gen_bins, T, D].
  Var assemble_condition(const Var& c_lf) const;

  /// Velocity estimate on the generation band; output shape equals x_t.
  Var vfe_forward(double t, const Var& x_t, const Var& cond_map,
                  int rate_idx) const;

  long count_feature_encoder() const { return store_.count_matching("fe."); }
  long count_vfe() const { return store_.count_matching("vfe."); }
  long count_total() const { return store_.count_total(); }

 private:
  void build(Rng& rng);
  Var block(const Var& x, const Var& g, const std::string& prefix) const;
  Var time_embedding(double t) const;

  VfeConfig cfg_;
  ParamStore store_;
  Tensor pos_table_;  // [kBins, D] sinusoidal frequency ladder
};

}  // namespace bandflow

#endif  // BANDFLOW_MODEL_HPP_
