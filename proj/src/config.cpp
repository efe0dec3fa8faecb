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

#include "valdnet/config.hpp"

#include <nlohmann/json.hpp>

#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"

namespace valdnet {

using nlohmann::json;

namespace {

json backbone_json(const BackboneConfig& b) {
  json stages = json::array();
  for (const StageConfig& s : b.stages) {
    stages.push_back({{"expansion", s.expansion},
                      {"out_channels", s.out_channels},
                      {"stride", s.stride},
                      {"repeats", s.repeats}});
  }
  return {{"stem_filters", b.stem_filters},
          {"stages", stages},
          {"se_reduction", b.se_reduction},
          {"feature_dim", b.feature_dim}};
}

void backbone_from(const json& j, BackboneConfig& b, std::size_t input_size) {
  b.input_size = input_size;
  b.stem_filters = j.at("stem_filters").get<std::size_t>();
  b.se_reduction = j.at("se_reduction").get<std::size_t>();
  b.feature_dim = j.at("feature_dim").get<std::size_t>();
  b.stages.clear();
  for (const json& s : j.at("stages")) {
    StageConfig st;
    for (const auto& [key, value] : s.items()) {
      if (key != "expansion" && key != "out_channels" && key != "stride" &&
          key != "repeats") {
        throw ContractError("unknown stage key: " + key);
      }
    }
    st.expansion = s.at("expansion").get<std::size_t>();
    st.out_channels = s.at("out_channels").get<std::size_t>();
    st.stride = s.at("stride").get<std::size_t>();
    st.repeats = s.at("repeats").get<std::size_t>();
    b.stages.push_back(st);
  }
}

json to_doc(const RunConfig& c) {
  const ModelConfig& m = c.model;
  const TrainConfig& t = c.train;
  return {
      {"model",
       {{"input_size", m.input_size},
        {"frames", m.frames},
        {"cell", std::string(cell_name(m.cell))},
        {"hidden", m.hidden},
        {"flow_offset", m.flow_offset},
        {"fc", m.fc},
        {"rgb", backbone_json(m.rgb)},
        {"flow", backbone_json(m.flow)}}},
      {"train",
       {{"optimizer", t.optimizer},
        {"learning_rate", t.learning_rate},
        {"batch_size", t.batch_size},
        {"epochs", t.epochs},
        {"rho", t.rho},
        {"epsilon", t.epsilon},
        {"seed", t.seed},
        {"wall_clock", t.wall_clock}}},
      {"flow", {{"alpha", c.flow.alpha}, {"iterations", c.flow.iterations}}},
      {"synth",
       {{"per_class", c.synth.per_class},
        {"frames", c.synth.frames},
        {"size", c.synth.size}}},
  };
}

RunConfig from_doc(const json& d) {
  RunConfig c;
  const json& m = d.at("model");
  c.model.input_size = m.at("input_size").get<std::size_t>();
  c.model.frames = m.at("frames").get<std::size_t>();
  c.model.cell = parse_cell(m.at("cell").get<std::string>());
  c.model.hidden = m.at("hidden").get<std::size_t>();
  c.model.flow_offset = m.at("flow_offset").get<std::size_t>();
  c.model.fc = m.at("fc").get<std::vector<std::size_t>>();
  c.model.rgb.input_channels = 3;
  c.model.flow.input_channels = 2;
  backbone_from(m.at("rgb"), c.model.rgb, c.model.input_size);
  backbone_from(m.at("flow"), c.model.flow, c.model.input_size);
  const json& t = d.at("train");
  c.train.optimizer = t.at("optimizer").get<std::string>();
  c.train.learning_rate = t.at("learning_rate").get<double>();
  c.train.batch_size = t.at("batch_size").get<std::size_t>();
  c.train.epochs = t.at("epochs").get<std::size_t>();
  c.train.rho = t.at("rho").get<double>();
  c.train.epsilon = t.at("epsilon").get<double>();
  c.train.seed = t.at("seed").get<std::uint64_t>();
  c.train.wall_clock = t.at("wall_clock").get<bool>();
  c.flow.alpha = d.at("flow").at("alpha").get<double>();
  c.flow.iterations = d.at("flow").at("iterations").get<int>();
  c.synth.per_class = d.at("synth").at("per_class").get<std::size_t>();
  c.synth.frames = d.at("synth").at("frames").get<std::size_t>();
  c.synth.size = d.at("synth").at("size").get<std::size_t>();
  c.model.validate();
  c.train.validate();
  return c;
}

// Objects merge key by key; anything else replaces the default wholesale.
void merge_into(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw ContractError("config section " + path + " must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!dst.contains(key)) throw ContractError("unknown config key: " + where);
    if (dst[key].is_object()) {
      merge_into(dst[key], value, where);
    } else {
      dst[key] = value;
    }
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ContractError("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ContractError("unknown config key: " + key);
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  if (node->is_object() && !value.is_object()) {
    throw ContractError("config key " + key + " is a section, not a value");
  }
  *node = std::move(value);
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) {
  return to_doc(config).dump(2) + "\n";
}

RunConfig merge_run_config(const RunConfig& base, std::string_view json_text,
                           const std::vector<std::string>& overrides) {
  json doc = to_doc(base);
  try {
    if (!json_text.empty()) {
      merge_into(doc, json::parse(json_text), "");
    }
    for (const std::string& o : overrides) apply_override(doc, o);
    return from_doc(doc);
  } catch (const json::exception& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides,
                          const RunConfig& base) {
  const std::string text = path ? read_file(*path) : std::string();
  return merge_run_config(base, text, overrides);
}

}  // namespace valdnet
