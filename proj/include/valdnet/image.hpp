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

#ifndef VALDNET_IMAGE_HPP_
#define VALDNET_IMAGE_HPP_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "valdnet/tensor.hpp"

namespace valdnet {

// Binary P6 with maxval 255 -> [3,H,W] scaled by 1/255.
Tensor load_ppm(std::string_view bytes);
// [3,H,W] in [0,1] -> P6 bytes; values are clamped then rounded to 8 bits.
std::string write_ppm(const Tensor& image);

Tensor read_ppm_file(const std::filesystem::path& path);
void write_ppm_file(const Tensor& image, const std::filesystem::path& path);

// [C,H,W] -> [C,size,size]. Integer downscale factors use box averaging,
// anything else bilinear sampling at pixel centres.
Tensor resize(const Tensor& image, std::size_t size);

}  // namespace valdnet

#endif  // VALDNET_IMAGE_HPP_
