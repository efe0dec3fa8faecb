/* Copyright 2026 The ValdNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// JSON run configuration mirroring ModelConfig / TrainConfig field names:
//
//   {
//     "model": {"input_size", "frames", "cell", "hidden", "flow_offset", "fc",
//               "rgb": {"stem_filters", "stages", "se_reduction", "feature_dim"},
//               "flow": {...same as rgb...}},
//     "train": {"optimizer", "learning_rate", "batch_size", "epochs", "rho",
//               "epsilon", "seed", "wall_clock"},
//     "flow":  {"alpha", "iterations"},
//     "synth": {"per_class", "frames", "size"}
//   }
//
// Stages are objects {"expansion", "out_channels", "stride", "repeats"}.
// A config file only needs the keys it changes; unknown keys are rejected.

#ifndef VALDNET_CONFIG_HPP_
#define VALDNET_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "valdnet/data.hpp"
#include "valdnet/flow.hpp"
#include "valdnet/model.hpp"
#include "valdnet/train.hpp"

namespace valdnet {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  FlowOptions flow;
  SynthOptions synth;
};

std::string run_config_to_json(const RunConfig& config);

// Starts from `base`, merges `json_text`, then applies "a.b.c=value"
// overrides in order. Values parse as JSON, falling back to a bare string.
// Throws ContractError on unknown keys or ill-typed values.
RunConfig merge_run_config(const RunConfig& base, std::string_view json_text,
                           const std::vector<std::string>& overrides);

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides,
                          const RunConfig& base = {});

}  // namespace valdnet

#endif  // VALDNET_CONFIG_HPP_
