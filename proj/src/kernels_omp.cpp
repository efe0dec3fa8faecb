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

#include <algorithm>
#include <cmath>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "valdnet/errors.hpp"
#include "valdnet/kernels.hpp"

namespace valdnet {

ConvGeometry conv_geometry(std::size_t in_h, std::size_t in_w, std::size_t k_h,
                           std::size_t k_w, std::size_t stride,
                           Padding padding) {
  if (stride < 1) throw ContractError("convolution stride must be >= 1");
  ConvGeometry g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.k_h = k_h;
  g.k_w = k_w;
  g.stride = stride;
  auto pad_total = [&](std::size_t extent, std::size_t k) -> std::size_t {
    if (padding == Padding::kValid) return 0;
    const std::size_t out = (extent + stride - 1) / stride;
    const std::size_t needed = (out - 1) * stride + k;
    return needed > extent ? needed - extent : 0;
  };
  const std::size_t ph = pad_total(in_h, k_h);
  const std::size_t pw = pad_total(in_w, k_w);
  if (k_h > in_h + ph || k_w > in_w + pw) {
    throw DimensionError("kernel extents exceed padded input extents");
  }
  g.pad_top = ph / 2;
  g.pad_left = pw / 2;
  g.out_h = (in_h + ph - k_h) / stride + 1;
  g.out_w = (in_w + pw - k_w) / stride + 1;
  return g;
}

namespace kernels {

namespace {
int g_max_threads = 0;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return g_max_threads > 0 ? g_max_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
  g_max_threads = n;
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

namespace omp {

#define VALDNET_PARALLEL_FOR _Pragma("omp parallel for schedule(static)")
#include "kernels_impl.inc"
#undef VALDNET_PARALLEL_FOR

}  // namespace omp
}  // namespace kernels
}  // namespace valdnet
