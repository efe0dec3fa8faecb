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

// Two-stream model: RGB and flow backbones applied per frame, features
// summed, a bidirectional recurrent layer, temporal mean, and a 3-layer
// fully connected head ending in a sigmoid.

#ifndef VALDNET_MODEL_HPP_
#define VALDNET_MODEL_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "valdnet/backbone.hpp"
#include "valdnet/recurrent.hpp"
#include "valdnet/tape.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {

struct ModelConfig {
  BackboneConfig rgb{};
  BackboneConfig flow{.input_channels = 2};
  CellKind cell = CellKind::kGru;
  std::size_t hidden = 16;
  std::size_t flow_offset = 1;
  std::vector<std::size_t> fc = {32, 16, 1};
  std::size_t frames = 12;
  std::size_t input_size = 64;

  // Small configuration used by the acceptance benchmark and the examples.
  static ModelConfig micro();

  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::vector<ParamSpec> model_params(const ModelConfig& config);
WeightStore init_model(const ModelConfig& config, std::uint64_t seed);

Var fuse_sum(Tape& tape, Var a, Var b);

// Probability of class 1 for T RGB frames [3,S,S] and T flows [2,S,S].
// With `use_flow` false the flow stream is skipped (RGB-only ablation).
Var valdnet_forward(Bindings& w, const ModelConfig& config,
                    std::span<const Var> rgb, std::span<const Var> flows,
                    bool use_flow = true);

// -(y ln p + (1-y) ln(1-p)) with p clamped to [1e-7, 1-1e-7].
double bce_loss(double p, int label);

struct RmspropOptions {
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-7;
};

// acc <- rho acc + (1-rho) g^2; param <- param - lr g / (sqrt(acc) + eps).
void rmsprop_step(std::span<double> param, std::span<const double> grad,
                  std::span<double> accumulator, const RmspropOptions& options);

}  // namespace valdnet

#endif  // VALDNET_MODEL_HPP_
