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

#include "valdnet/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"

namespace valdnet {

namespace {

// Reads one whitespace-delimited header integer, skipping '#' comments.
std::size_t header_int(std::string_view bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const unsigned char c = static_cast<unsigned char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t value = 0;
  std::size_t digits = 0;
  while (pos < bytes.size() &&
         std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    value = value * 10 + static_cast<std::size_t>(bytes[pos] - '0');
    ++pos;
    if (++digits > 9) throw FormatError("PPM: header value too large");
  }
  if (digits == 0) throw FormatError("PPM: malformed header");
  return value;
}

}  // namespace

Tensor load_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw FormatError("PPM: bad magic (expected P6)");
  }
  std::size_t pos = 2;
  const std::size_t width = header_int(bytes, pos);
  const std::size_t height = header_int(bytes, pos);
  const std::size_t maxval = header_int(bytes, pos);
  if (width == 0 || height == 0) throw FormatError("PPM: zero extent");
  if (maxval != 255) throw FormatError("PPM: only maxval 255 is supported");
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError("PPM: missing separator before pixel data");
  }
  ++pos;
  const std::size_t hw = width * height;
  if (bytes.size() - pos < 3 * hw) throw FormatError("PPM: truncated pixel data");
  Tensor image({3, height, width});
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      image[c * hw + p] =
          static_cast<double>(static_cast<unsigned char>(bytes[pos + 3 * p + c])) /
          255.0;
    }
  }
  return image;
}

std::string write_ppm(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw DimensionError("write_ppm expects [3,H,W], got " +
                         shape_string(image.shape()));
  }
  require_finite(image, "write_ppm");
  const std::size_t h = image.dim(1), w = image.dim(2), hw = h * w;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + 3 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(image[c * hw + p], 0.0, 1.0);
      out[header + 3 * p + c] = static_cast<char>(
          static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  return out;
}

Tensor read_ppm_file(const std::filesystem::path& path) {
  try {
    return load_ppm(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_ppm_file(const Tensor& image, const std::filesystem::path& path) {
  write_file(path, write_ppm(image));
}

Tensor resize(const Tensor& image, std::size_t size) {
  if (image.rank() != 3) throw DimensionError("resize expects [C,H,W]");
  if (size == 0) throw ContractError("resize target must be positive");
  const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == size && w == size) return image;
  Tensor out({c, size, size});
  if (h % size == 0 && w % size == 0) {
    const std::size_t fy = h / size, fx = w / size;
    const double inv = 1.0 / static_cast<double>(fy * fx);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          double acc = 0.0;
          for (std::size_t dy = 0; dy < fy; ++dy) {
            for (std::size_t dx = 0; dx < fx; ++dx) {
              acc += image[(ch * h + y * fy + dy) * w + x * fx + dx];
            }
          }
          out[(ch * size + y) * size + x] = acc * inv;
        }
      }
    }
    return out;
  }
  const double sy = static_cast<double>(h) / static_cast<double>(size);
  const double sx = static_cast<double>(w) / static_cast<double>(size);
  for (std::size_t y = 0; y < size; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(h - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < size; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5,
                                   0.0, static_cast<double>(w - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double* src = image.data() + ch * h * w;
        const double top = (1 - tx) * src[y0 * w + x0] + tx * src[y0 * w + x1];
        const double bot = (1 - tx) * src[y1 * w + x0] + tx * src[y1 * w + x1];
        out[(ch * size + y) * size + x] = (1 - ty) * top + ty * bot;
      }
    }
  }
  return out;
}

}  // namespace valdnet
