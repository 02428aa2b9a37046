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
#ifndef BANDFLOW_CLI_HPP_
#define BANDFLOW_CLI_HPP_

#include <string>

#include "bandflow/model.hpp"
#include "bandflow/trainer.hpp"

namespace bandflow {

/// One config file drives a run: {"model": VfeConfig, "train": TrainConfig}.
/// Absent keys keep their defaults.
struct RunConfig {
  VfeConfig model;
  TrainConfig train;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// Entry point behind main(). Exit codes: 0 success, 1 usage,
/// 2 data error, 3 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace bandflow

#endif  // BANDFLOW_CLI_HPP_
