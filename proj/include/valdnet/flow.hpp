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

// Optical flow: a Horn-Schunck estimator, bilinear warping, a correlation
// cost volume and Middlebury .flo interchange.

#ifndef VALDNET_FLOW_HPP_
#define VALDNET_FLOW_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "valdnet/tensor.hpp"

namespace valdnet {

// Per-pixel displacement (u right, v down) in pixels, stored interleaved.
class FlowField {
 public:
  FlowField(std::size_t width, std::size_t height);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }

  double& u(std::size_t x, std::size_t y) { return uv_[2 * (y * width_ + x)]; }
  double& v(std::size_t x, std::size_t y) { return uv_[2 * (y * width_ + x) + 1]; }
  double u(std::size_t x, std::size_t y) const { return uv_[2 * (y * width_ + x)]; }
  double v(std::size_t x, std::size_t y) const {
    return uv_[2 * (y * width_ + x) + 1];
  }

  std::vector<double>& interleaved() noexcept { return uv_; }
  const std::vector<double>& interleaved() const noexcept { return uv_; }

  double mean_magnitude() const;

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> uv_;
};

struct FlowOptions {
  double alpha = 15.0;
  int iterations = 100;
};

// Luminance 0.299 R + 0.587 G + 0.114 B of a [3,H,W] image -> [H,W].
Tensor to_grayscale(const Tensor& rgb);

// Horn-Schunck with Jacobi updates from a zero field. Inputs are [H,W]
// intensities in [0,1]; derivatives are taken on the 0-255 scale so that
// `alpha` carries its customary 8-bit meaning.
FlowField estimate_flow(const Tensor& frame_a, const Tensor& frame_b,
                        const FlowOptions& options = {});

// output(p) = image sampled bilinearly at p + flow(p), clamped to the border.
Tensor warp(const Tensor& image, const FlowField& flow);

// [(2d+1)^2, H, W]; channel (dy+d)*(2d+1) + (dx+d) holds
// (1/C) * sum_c a(c,p) * b(c,p+(dx,dy)), zero when p+(dx,dy) is outside.
Tensor cost_volume(const Tensor& feat_a, const Tensor& feat_b,
                   std::size_t max_disp);

// CNN input: [2,H,W] with each component clamped to [-8,8] and divided by 8.
Tensor flow_to_network_input(const FlowField& flow);

inline constexpr float kFloMagic = 202021.25f;

FlowField read_flo(std::string_view bytes);
std::string write_flo(const FlowField& flow);
FlowField load_flo(const std::filesystem::path& path);
void save_flo(const FlowField& flow, const std::filesystem::path& path);

}  // namespace valdnet

#endif  // VALDNET_FLOW_HPP_
