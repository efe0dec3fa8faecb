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

#include "valdnet/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"

namespace valdnet {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

WeightStore WeightStore::initialize(const std::vector<ParamSpec>& specs,
                                    std::uint64_t seed) {
  WeightStore store;
  std::mt19937_64 rng(seed);
  for (const ParamSpec& spec : specs) {
    Tensor t(spec.shape);
    switch (spec.init) {
      case Init::kZeros:
        break;
      case Init::kOnes:
        for (double& v : t.values()) v = 1.0;
        break;
      case Init::kFanInUniform: {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(1, spec.fan_in)));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& v : t.values()) v = dist(rng);
        break;
      }
    }
    store.insert(spec.name, std::move(t));
  }
  return store;
}

void WeightStore::insert(const std::string& name, Tensor tensor) {
  if (name.empty()) throw ContractError("weight name must be non-empty");
  if (!tensors_.emplace(name, std::move(tensor)).second) {
    throw ContractError("duplicate weight name: " + name);
  }
}

bool WeightStore::contains(std::string_view name) const {
  return tensors_.find(name) != tensors_.end();
}

Tensor& WeightStore::at(std::string_view name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw DataError("missing weight: " + std::string(name));
  }
  return it->second;
}

const Tensor& WeightStore::at(std::string_view name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) {
    throw DataError("missing weight: " + std::string(name));
  }
  return it->second;
}

std::size_t WeightStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors_) n += t.size();
  return n;
}

void WeightStore::set_requires_grad(bool on) {
  for (auto& [name, t] : tensors_) t.set_requires_grad(on);
}

void WeightStore::zero_grad() {
  for (auto& [name, t] : tensors_) {
    if (t.requires_grad()) t.zero_grad();
  }
}

WeightStore WeightStore::quantized() const {
  WeightStore out;
  for (const auto& [name, t] : tensors_) {
    Tensor q(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) {
      q[i] = static_cast<double>(static_cast<float>(t[i]));
    }
    out.insert(name, std::move(q));
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'V', 'L', 'D', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_f32(std::string& out, float v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("VLDW: truncated payload");
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  float f32() {
    float v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_vldw(const WeightStore& store) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.values()) put_f32(out, static_cast<float>(v));
  }
  return out;
}

WeightStore decode_vldw(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4) != std::string_view(kMagic, 4)) {
    throw FormatError("VLDW: bad magic");
  }
  const std::uint32_t version = in.u32();
  if (version != kVersion) {
    throw FormatError("VLDW: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32();
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name(in.take(in.u32()));
    const std::uint32_t rank = in.u32();
    if (rank == 0) throw FormatError("VLDW: zero-rank entry " + name);
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const std::uint32_t extent = in.u32();
      if (extent == 0) throw FormatError("VLDW: zero extent in " + name);
      shape.push_back(extent);
    }
    std::vector<double> values(shape_size(shape));
    for (double& v : values) v = static_cast<double>(in.f32());
    Tensor t(std::move(shape), std::move(values));
    if (!t.all_finite()) throw FormatError("VLDW: non-finite value in " + name);
    if (store.contains(name)) throw FormatError("VLDW: duplicate entry " + name);
    store.insert(name, std::move(t));
  }
  if (!in.done()) throw FormatError("VLDW: trailing bytes after last entry");
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  write_file(path, encode_vldw(store));
}

WeightStore load_weights(const std::filesystem::path& path) {
  return decode_vldw(read_file(path));
}

Var Bindings::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Var v = store_ ? tape_.parameter(store_->at(name))
                       : tape_.frozen(frozen_->at(name));
  bound_.emplace(name, v);
  return v;
}

void Bindings::preset(const std::string& name, Var v) { bound_[name] = v; }

}  // namespace valdnet
