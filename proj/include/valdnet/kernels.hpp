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

// Raw compute loops behind the differentiable operators and the flow
// operators. Every kernel exists twice: `serial` is the reference and
// `omp` splits the outermost independent loop across OpenMP threads. Each
// output element is produced by one thread with the same accumulation order
// as the serial loop, so both variants are bit-identical.

#ifndef VALDNET_KERNELS_HPP_
#define VALDNET_KERNELS_HPP_

#include <cstddef>
#include <span>

namespace valdnet {

enum class Padding { kValid, kSame };

struct ConvGeometry {
  std::size_t in_h = 0, in_w = 0;
  std::size_t k_h = 0, k_w = 0;
  std::size_t stride = 1;
  std::size_t pad_top = 0, pad_left = 0;
  std::size_t out_h = 0, out_w = 0;
};

// "same" pads symmetrically with the odd pixel on the bottom/right, giving
// ceil(extent / stride) outputs. Throws DimensionError if the kernel does not
// fit the padded input.
ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t k_h,
                           std::size_t k_w, std::size_t stride,
                           Padding padding);

namespace kernels {

#define VALDNET_KERNEL_DECLS                                                   \
  void conv2d_forward(std::span<const double> in, std::size_t c_in,            \
                      std::span<const double> kernel, std::size_t c_out,       \
                      const ConvGeometry& g, std::span<double> out);           \
  void conv2d_backward_input(std::span<const double> d_out,                    \
                             std::span<const double> kernel, std::size_t c_in, \
                             std::size_t c_out, const ConvGeometry& g,         \
                             std::span<double> d_in);                          \
  void conv2d_backward_kernel(std::span<const double> d_out,                   \
                              std::span<const double> in, std::size_t c_in,    \
                              std::size_t c_out, const ConvGeometry& g,        \
                              std::span<double> d_kernel);                     \
  void depthwise_forward(std::span<const double> in, std::size_t channels,     \
                         std::span<const double> kernel,                       \
                         const ConvGeometry& g, std::span<double> out);        \
  void depthwise_backward_input(std::span<const double> d_out,                 \
                                std::span<const double> kernel,                \
                                std::size_t channels, const ConvGeometry& g,   \
                                std::span<double> d_in);                       \
  void depthwise_backward_kernel(std::span<const double> d_out,                \
                                 std::span<const double> in,                   \
                                 std::size_t channels, const ConvGeometry& g,  \
                                 std::span<double> d_kernel);                  \
  void matmul(std::span<const double> a, std::span<const double> b,            \
              std::size_t m, std::size_t k, std::size_t n,                     \
              std::span<double> out);                                          \
  void matmul_grad_a(std::span<const double> d_out, std::span<const double> b, \
                     std::size_t m, std::size_t k, std::size_t n,              \
                     std::span<double> d_a);                                   \
  void matmul_grad_b(std::span<const double> d_out, std::span<const double> a, \
                     std::size_t m, std::size_t k, std::size_t n,              \
                     std::span<double> d_b);                                   \
  void warp_bilinear(std::span<const double> image, std::size_t channels,      \
                     std::size_t h, std::size_t w,                             \
                     std::span<const double> flow_uv, std::span<double> out);  \
  void cost_volume(std::span<const double> a, std::span<const double> b,       \
                   std::size_t channels, std::size_t h, std::size_t w,         \
                   std::size_t max_disp, std::span<double> out);               \
  void horn_schunck_step(std::span<const double> ix,                           \
                         std::span<const double> iy,                           \
                         std::span<const double> it, std::size_t h,            \
                         std::size_t w, double alpha2,                         \
                         std::span<const double> u, std::span<const double> v, \
                         std::span<double> u_next, std::span<double> v_next);

// Gradient kernels accumulate (+=) into their output buffers; forward kernels
// overwrite theirs.
namespace serial {
VALDNET_KERNEL_DECLS
}  // namespace serial

namespace omp {
VALDNET_KERNEL_DECLS
}  // namespace omp

#undef VALDNET_KERNEL_DECLS

// Upper bound on threads used by the omp kernels and data workers.
int max_threads();
void set_max_threads(int n);

}  // namespace kernels
}  // namespace valdnet

#endif  // VALDNET_KERNELS_HPP_
