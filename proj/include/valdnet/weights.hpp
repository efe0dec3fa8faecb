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

#ifndef VALDNET_WEIGHTS_HPP_
#define VALDNET_WEIGHTS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "valdnet/tape.hpp"
#include "valdnet/tensor.hpp"

namespace valdnet {

enum class Init { kFanInUniform, kZeros, kOnes };

// Declaration of one learned tensor, produced by the model builders.
struct ParamSpec {
  std::string name;
  Shape shape;
  Init init = Init::kFanInUniform;
  std::size_t fan_in = 1;
};

// Named learned parameters. Iteration (and therefore serialization) order is
// lexicographic by name.
class WeightStore {
 public:
  // Fan-in tensors draw U(-b, b) with b = sqrt(6 / fan_in), in spec order,
  // from a single generator seeded with `seed`.
  static WeightStore initialize(const std::vector<ParamSpec>& specs,
                                std::uint64_t seed);

  void insert(const std::string& name, Tensor tensor);
  bool contains(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  std::size_t size() const noexcept { return tensors_.size(); }
  std::size_t parameter_count() const;

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  void set_requires_grad(bool on);
  void zero_grad();

  // Copy with every value rounded through float32, i.e. exactly what a
  // save/load cycle yields.
  WeightStore quantized() const;

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.tensors_ == b.tensors_;
  }

 private:
  std::map<std::string, Tensor, std::less<>> tensors_;
};

// VLDW container: "VLDW", u32 version (1), u32 entry count, then per entry
// u32 name length, UTF-8 name, u32 rank, rank x u32 extents and the float32
// values. All integers and floats little-endian.
std::string encode_vldw(const WeightStore& store);
WeightStore decode_vldw(std::string_view bytes);
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

// Lazily binds store tensors onto a tape, one leaf per name. A mutable store
// binds trainable parameters; a const store binds frozen leaves, which is
// what concurrent inference on shared weights uses.
class Bindings {
 public:
  Bindings(Tape& tape, WeightStore& store)
      : tape_(tape), store_(&store), frozen_(&store) {}
  Bindings(Tape& tape, const WeightStore& store)
      : tape_(tape), frozen_(&store) {}

  Var operator()(const std::string& name);
  // Routes `name` to an existing leaf instead of creating one.
  void preset(const std::string& name, Var v);
  Tape& tape() noexcept { return tape_; }

 private:
  Tape& tape_;
  WeightStore* store_ = nullptr;
  const WeightStore* frozen_;
  std::unordered_map<std::string, Var> bound_;
};

}  // namespace valdnet

#endif  // VALDNET_WEIGHTS_HPP_
