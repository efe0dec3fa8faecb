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

#include "valdnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "valdnet/errors.hpp"

namespace valdnet {

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.input_size = 32;
  for (BackboneConfig* b : {&c.rgb, &c.flow}) {
    b->input_size = 32;
    b->stem_filters = 8;
    b->stages = {{1, 8, 1, 1}, {4, 16, 2, 1}};
    b->se_reduction = 4;
    b->feature_dim = 16;
  }
  c.hidden = 8;
  return c;
}

void ModelConfig::validate() const {
  rgb.validate();
  flow.validate();
  if (rgb.input_channels != 3) throw ContractError("rgb stream needs 3 channels");
  if (flow.input_channels != 2) throw ContractError("flow stream needs 2 channels");
  if (rgb.input_size != input_size || flow.input_size != input_size) {
    throw ContractError("backbone input sizes must equal input_size");
  }
  if (rgb.feature_dim != flow.feature_dim) {
    throw ContractError("both streams must emit the same feature_dim");
  }
  if (flow_offset < 1 || flow_offset > 3) {
    throw ContractError("flow_offset must be 1, 2 or 3");
  }
  if (frames < 1) throw ContractError("frames must be >= 1");
  if (hidden < 1) throw ContractError("hidden must be >= 1");
  if (fc.empty() || fc.back() != 1) {
    throw ContractError("the last fully connected layer must have size 1");
  }
  for (std::size_t n : fc) {
    if (n == 0) throw ContractError("fully connected sizes must be positive");
  }
}

std::vector<ParamSpec> model_params(const ModelConfig& config) {
  config.validate();
  std::vector<ParamSpec> specs = backbone_params(config.rgb, "rgb");
  for (ParamSpec& p : backbone_params(config.flow, "flow")) specs.push_back(std::move(p));
  const std::size_t features = config.rgb.feature_dim;
  for (const char* dir : {"rnn.fwd", "rnn.bwd"}) {
    for (ParamSpec& p : recurrent_params(config.cell, features, config.hidden, dir)) {
      specs.push_back(std::move(p));
    }
  }
  std::size_t width = 2 * config.hidden;
  for (std::size_t i = 0; i < config.fc.size(); ++i) {
    const std::string base = "head." + std::to_string(i) + ".";
    specs.push_back({base + "W", {config.fc[i], width}, Init::kFanInUniform, width});
    specs.push_back({base + "b", {config.fc[i]}, Init::kZeros, 1});
    width = config.fc[i];
  }
  return specs;
}

WeightStore init_model(const ModelConfig& config, std::uint64_t seed) {
  return WeightStore::initialize(model_params(config), seed);
}

Var fuse_sum(Tape& tape, Var a, Var b) {
  if (tape.value(a).shape() != tape.value(b).shape()) {
    throw DimensionError("fuse_sum operands differ in shape");
  }
  return tape.add(a, b);
}

Var valdnet_forward(Bindings& w, const ModelConfig& config,
                    std::span<const Var> rgb, std::span<const Var> flows,
                    bool use_flow) {
  Tape& t = w.tape();
  if (rgb.size() != config.frames || (use_flow && flows.size() != config.frames)) {
    throw DimensionError("valdnet_forward expects " + std::to_string(config.frames) +
                         " frames per stream");
  }
  Var fused = time_distributed(w, "rgb", config.rgb, rgb);
  if (use_flow) {
    fused = fuse_sum(t, fused, time_distributed(w, "flow", config.flow, flows));
  }
  const RecurrentWeights fwd = bind_recurrent(w, config.cell, "rnn.fwd");
  const RecurrentWeights bwd = bind_recurrent(w, config.cell, "rnn.bwd");
  Var h = t.mean_rows(bidirectional(t, fused, fwd, bwd));
  for (std::size_t i = 0; i < config.fc.size(); ++i) {
    const std::string base = "head." + std::to_string(i) + ".";
    h = t.add(t.matvec(w(base + "W"), h), w(base + "b"));
    h = i + 1 < config.fc.size() ? t.swish(h) : t.sigmoid(h);
  }
  return t.reshape(h, {1});
}

double bce_loss(double p, int label) {
  const double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
  const double y = static_cast<double>(label);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

void rmsprop_step(std::span<double> param, std::span<const double> grad,
                  std::span<double> accumulator, const RmspropOptions& o) {
  if (param.size() != grad.size() || param.size() != accumulator.size()) {
    throw DimensionError("rmsprop_step: parameter, gradient and accumulator sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    accumulator[i] = o.rho * accumulator[i] + (1.0 - o.rho) * grad[i] * grad[i];
    param[i] -= o.learning_rate * grad[i] / (std::sqrt(accumulator[i]) + o.epsilon);
  }
}

}  // namespace valdnet
