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

#ifndef VALDNET_DATA_HPP_
#define VALDNET_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace valdnet {

enum class Split { kUnassigned, kTrain, kEval };

std::string_view split_name(Split split);

struct VideoSample {
  std::string id;
  std::vector<std::string> frames;  // relative to Manifest::root unless absolute
  int label = 0;                    // 0 no violence, 1 violence
  std::vector<std::string> flows;   // one .flo per sampled index, optional
  Split split = Split::kUnassigned;
};

struct Manifest {
  std::string name;
  std::size_t frame_width = 0;
  std::size_t frame_height = 0;
  // Offset used to produce `flows`, when present.
  std::optional<int> flow_offset;
  std::vector<VideoSample> samples;
  std::filesystem::path root;  // not serialized; set from the file location

  std::filesystem::path resolve(const std::string& path) const;
  std::vector<std::size_t> indices(Split split) const;
};

// K indices round_half_up(i (N-1) / (K-1)); short videos repeat indices.
std::vector<std::size_t> uniform_sample_indices(std::size_t total_frames,
                                                std::size_t count = 12);

// (t, min(t + k, N - 1)).
std::pair<std::size_t, std::size_t> flow_pair_indices(std::size_t sampled_index,
                                                      std::size_t offset,
                                                      std::size_t total_frames);

// Stratified per-class split: floor(0.8 n) train, the rest eval. Requires at
// least 5 samples per class.
Manifest split_dataset(Manifest manifest, std::uint64_t seed);

std::string manifest_to_json(const Manifest& manifest);
Manifest manifest_from_json(std::string_view json, std::filesystem::path root);
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct SynthOptions {
  std::size_t per_class = 100;
  std::size_t frames = 24;
  std::size_t size = 64;
};

// Writes <out_dir>/<id>/NNN.ppm for every sample and returns the manifest
// (unsplit, rooted at out_dir). Class 0 videos hold one Gaussian blob
// drifting at constant slow speed; class 1 videos hold the same kind of blob
// with a large random per-frame jitter added to the same kind of drift.
// Appearance and geometry are drawn from identical distributions for both
// classes.
Manifest generate_synthetic(std::uint64_t seed, const SynthOptions& options,
                            const std::filesystem::path& out_dir);

}  // namespace valdnet

#endif  // VALDNET_DATA_HPP_
