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

#include "valdnet/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"
#include "valdnet/kernels.hpp"

namespace valdnet {

FlowField::FlowField(std::size_t width, std::size_t height)
    : width_(width), height_(height), uv_(2 * width * height, 0.0) {
  if (width == 0 || height == 0) {
    throw DimensionError("flow field extents must be positive");
  }
}

double FlowField::mean_magnitude() const {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < uv_.size(); i += 2) {
    acc += std::hypot(uv_[i], uv_[i + 1]);
  }
  return acc / static_cast<double>(width_ * height_);
}

Tensor to_grayscale(const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) {
    throw DimensionError("to_grayscale expects [3,H,W], got " +
                         shape_string(rgb.shape()));
  }
  const std::size_t h = rgb.dim(1), w = rgb.dim(2), hw = h * w;
  Tensor gray({h, w});
  for (std::size_t i = 0; i < hw; ++i) {
    gray[i] = 0.299 * rgb[i] + 0.587 * rgb[hw + i] + 0.114 * rgb[2 * hw + i];
  }
  return gray;
}

namespace {

constexpr double kIntensityScale = 255.0;

void check_gray_pair(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("estimate_flow expects [H,W] grayscale frames");
  }
  if (a.shape() != b.shape()) {
    throw DimensionError("estimate_flow frame sizes differ: " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

}  // namespace

FlowField estimate_flow(const Tensor& frame_a, const Tensor& frame_b,
                        const FlowOptions& options) {
  check_gray_pair(frame_a, frame_b);
  if (options.iterations < 0) throw ContractError("iterations must be >= 0");
  if (!(options.alpha > 0.0)) throw ContractError("alpha must be positive");
  require_finite(frame_a, "estimate_flow frame_a");
  require_finite(frame_b, "estimate_flow frame_b");

  const std::size_t h = frame_a.dim(0), w = frame_a.dim(1), n = h * w;
  FlowField flow(w, h);
  if (options.iterations == 0) return flow;

  std::vector<double> ix(n), iy(n), it(n);
  auto at = [&](const Tensor& f, std::size_t y, std::size_t x) {
    return kIntensityScale * f[y * w + x];
  };
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t yu = y > 0 ? y - 1 : 0;
    const std::size_t yd = std::min(y + 1, h - 1);
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xl = x > 0 ? x - 1 : 0;
      const std::size_t xr = std::min(x + 1, w - 1);
      const std::size_t p = y * w + x;
      ix[p] = 0.25 * (at(frame_a, y, xr) - at(frame_a, y, xl) +
                      at(frame_b, y, xr) - at(frame_b, y, xl));
      iy[p] = 0.25 * (at(frame_a, yd, x) - at(frame_a, yu, x) +
                      at(frame_b, yd, x) - at(frame_b, yu, x));
      it[p] = at(frame_b, y, x) - at(frame_a, y, x);
    }
  }

  const double alpha2 = options.alpha * options.alpha;
  std::vector<double> u(n, 0.0), v(n, 0.0), u_next(n), v_next(n);
  for (int iter = 0; iter < options.iterations; ++iter) {
    kernels::omp::horn_schunck_step(ix, iy, it, h, w, alpha2, u, v, u_next,
                                    v_next);
    u.swap(u_next);
    v.swap(v_next);
  }
  std::vector<double>& uv = flow.interleaved();
  for (std::size_t p = 0; p < n; ++p) {
    uv[2 * p] = u[p];
    uv[2 * p + 1] = v[p];
  }
  require_finite(uv, "estimate_flow result");
  return flow;
}

Tensor warp(const Tensor& image, const FlowField& flow) {
  if (image.rank() != 3) throw DimensionError("warp expects a [C,H,W] image");
  if (image.dim(1) != flow.height() || image.dim(2) != flow.width()) {
    throw DimensionError("warp: image " + shape_string(image.shape()) +
                         " does not match flow " + std::to_string(flow.width()) +
                         "x" + std::to_string(flow.height()));
  }
  require_finite(flow.interleaved(), "warp flow");
  Tensor out(image.shape());
  kernels::omp::warp_bilinear(image.values(), image.dim(0), image.dim(1),
                              image.dim(2), flow.interleaved(), out.values());
  return out;
}

Tensor cost_volume(const Tensor& feat_a, const Tensor& feat_b,
                   std::size_t max_disp) {
  if (feat_a.rank() != 3 || feat_a.shape() != feat_b.shape()) {
    throw DimensionError("cost_volume needs equal [C,H,W] features, got " +
                         shape_string(feat_a.shape()) + " and " +
                         shape_string(feat_b.shape()));
  }
  const std::size_t side = 2 * max_disp + 1;
  Tensor out({side * side, feat_a.dim(1), feat_a.dim(2)});
  kernels::omp::cost_volume(feat_a.values(), feat_b.values(), feat_a.dim(0),
                            feat_a.dim(1), feat_a.dim(2), max_disp,
                            out.values());
  return out;
}

Tensor flow_to_network_input(const FlowField& flow) {
  constexpr double kLimit = 8.0;
  const std::size_t h = flow.height(), w = flow.width(), hw = h * w;
  Tensor out({2, h, w});
  const std::vector<double>& uv = flow.interleaved();
  for (std::size_t p = 0; p < hw; ++p) {
    out[p] = std::clamp(uv[2 * p], -kLimit, kLimit) / kLimit;
    out[hw + p] = std::clamp(uv[2 * p + 1], -kLimit, kLimit) / kLimit;
  }
  return out;
}

namespace {

template <typename T>
T read_le(std::string_view bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void append_le(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

FlowField read_flo(std::string_view bytes) {
  if (bytes.size() < 12) throw FormatError(".flo: truncated header");
  if (read_le<float>(bytes, 0) != kFloMagic) {
    throw FormatError(".flo: bad magic (expected 202021.25)");
  }
  const std::int32_t width = read_le<std::int32_t>(bytes, 4);
  const std::int32_t height = read_le<std::int32_t>(bytes, 8);
  if (width <= 0 || height <= 0) throw FormatError(".flo: non-positive extent");
  const std::size_t count = 2 * static_cast<std::size_t>(width) *
                            static_cast<std::size_t>(height);
  if (bytes.size() - 12 < count * 4) throw FormatError(".flo: truncated payload");
  if (bytes.size() - 12 > count * 4) throw FormatError(".flo: trailing bytes");
  FlowField flow(static_cast<std::size_t>(width), static_cast<std::size_t>(height));
  std::vector<double>& uv = flow.interleaved();
  for (std::size_t i = 0; i < count; ++i) {
    uv[i] = static_cast<double>(read_le<float>(bytes, 12 + 4 * i));
  }
  require_finite(uv, ".flo payload");
  return flow;
}

std::string write_flo(const FlowField& flow) {
  std::string out;
  out.reserve(12 + 4 * flow.interleaved().size());
  append_le(out, kFloMagic);
  append_le(out, static_cast<std::int32_t>(flow.width()));
  append_le(out, static_cast<std::int32_t>(flow.height()));
  for (double v : flow.interleaved()) append_le(out, static_cast<float>(v));
  return out;
}

FlowField load_flo(const std::filesystem::path& path) {
  return read_flo(read_file(path));
}

void save_flo(const FlowField& flow, const std::filesystem::path& path) {
  write_file(path, write_flo(flow));
}

}  // namespace valdnet
