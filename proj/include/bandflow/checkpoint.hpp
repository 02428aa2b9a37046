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
#ifndef BANDFLOW_CHECKPOINT_HPP_
#define BANDFLOW_CHECKPOINT_HPP_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bandflow/model.hpp"
#include "bandflow/tensor.hpp"

namespace bandflow {

/// First and second adaptive moments, parallel to the model's parameter
/// order, plus the shared update counter.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long t = 0;
};

/// Binary container: magic/version header, config JSON, named shaped
/// arrays, optional optimizer moments. Writes are atomic (temp + rename).
void save_checkpoint(const std::string& path, const Model& model, long step,
                     const AdamState* opt);

struct CheckpointData {
  VfeConfig config;
  long step = 0;
  std::vector<std::pair<std::string, Tensor>> params;
  bool has_opt = false;
  AdamState opt;
};

CheckpointData load_checkpoint(const std::string& path);

/// Instantiates a model from the stored config and loads every array,
/// validating names and shapes.
std::unique_ptr<Model> model_from_checkpoint(const CheckpointData& data);

}  // namespace bandflow

#endif  // BANDFLOW_CHECKPOINT_HPP_
