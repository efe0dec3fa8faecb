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

#include "valdnet/data.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"

namespace valdnet {

using nlohmann::json;

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kEval: return "eval";
    default: return "unassigned";
  }
}

std::filesystem::path Manifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : root / p;
}

std::vector<std::size_t> Manifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> uniform_sample_indices(std::size_t total_frames,
                                                std::size_t count) {
  if (count < 2) throw ContractError("sample count K must be >= 2");
  if (total_frames < 1) throw ContractError("video needs at least one frame");
  std::vector<std::size_t> out(count);
  const std::size_t span = total_frames - 1;
  const std::size_t steps = count - 1;
  for (std::size_t i = 0; i < count; ++i) {
    // floor(i*span/steps + 1/2) in exact integer arithmetic.
    out[i] = (2 * i * span + steps) / (2 * steps);
  }
  return out;
}

std::pair<std::size_t, std::size_t> flow_pair_indices(std::size_t sampled_index,
                                                      std::size_t offset,
                                                      std::size_t total_frames) {
  if (total_frames == 0 || sampled_index >= total_frames) {
    throw ContractError("sampled index outside the video");
  }
  return {sampled_index, std::min(sampled_index + offset, total_frames - 1)};
}

Manifest split_dataset(Manifest manifest, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.samples.size(); ++i) {
      if (manifest.samples[i].label == label) members.push_back(i);
    }
    if (members.size() < 5) {
      throw DataError("class " + std::to_string(label) + " has " +
                      std::to_string(members.size()) +
                      " samples; the split needs at least 5");
    }
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_train = members.size() * 8 / 10;
    for (std::size_t j = 0; j < members.size(); ++j) {
      manifest.samples[members[j]].split = j < n_train ? Split::kTrain : Split::kEval;
    }
  }
  return manifest;
}

std::string manifest_to_json(const Manifest& m) {
  json doc;
  doc["name"] = m.name;
  doc["frame_size"] = {m.frame_width, m.frame_height};
  if (m.flow_offset) doc["flow_offset"] = *m.flow_offset;
  json samples = json::array();
  for (const VideoSample& s : m.samples) {
    json js;
    js["id"] = s.id;
    js["label"] = s.label;
    js["frames"] = s.frames;
    if (!s.flows.empty()) js["flows"] = s.flows;
    if (s.split != Split::kUnassigned) js["split"] = split_name(s.split);
    samples.push_back(std::move(js));
  }
  doc["samples"] = std::move(samples);
  return doc.dump(1) + "\n";
}

Manifest manifest_from_json(std::string_view text, std::filesystem::path root) {
  Manifest m;
  m.root = std::move(root);
  try {
    const json doc = json::parse(text);
    m.name = doc.at("name").get<std::string>();
    const json& size = doc.at("frame_size");
    if (size.is_array()) {
      m.frame_width = size.at(0).get<std::size_t>();
      m.frame_height = size.at(1).get<std::size_t>();
    } else {
      m.frame_width = m.frame_height = size.get<std::size_t>();
    }
    if (doc.contains("flow_offset")) m.flow_offset = doc["flow_offset"].get<int>();
    for (const json& js : doc.at("samples")) {
      VideoSample s;
      s.id = js.at("id").get<std::string>();
      s.label = js.at("label").get<int>();
      s.frames = js.at("frames").get<std::vector<std::string>>();
      if (js.contains("flows")) s.flows = js["flows"].get<std::vector<std::string>>();
      if (js.contains("split")) {
        const std::string split = js["split"].get<std::string>();
        if (split == "train") {
          s.split = Split::kTrain;
        } else if (split == "eval") {
          s.split = Split::kEval;
        } else {
          throw FormatError("manifest: sample " + s.id + " has unknown split '" +
                            split + "'");
        }
      }
      if (s.label != 0 && s.label != 1) {
        throw FormatError("manifest: sample " + s.id + " label must be 0 or 1");
      }
      if (s.frames.empty()) {
        throw FormatError("manifest: sample " + s.id + " has no frames");
      }
      m.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  return manifest_from_json(read_file(path), path.parent_path());
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file(path, manifest_to_json(manifest));
}

}  // namespace valdnet
