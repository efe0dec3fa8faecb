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

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "valdnet/data.hpp"
#include "valdnet/errors.hpp"
#include "valdnet/image.hpp"
#include "valdnet/tensor.hpp"

namespace valdnet {

namespace {

// Folds x back into [lo, hi] like a ball bouncing off walls.
double reflect(double x, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double t = std::fmod(x - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return t <= span ? lo + t : lo + 2.0 * span - t;
}

struct Video {
  double background;
  double amplitude[3];
  double sigma;
  std::vector<double> xs, ys;
};

// All draws except the jitter are shared between classes, in the same order.
Video draw_video(std::uint64_t seed, std::size_t index, int label,
                 const SynthOptions& o) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const double scale = static_cast<double>(o.size) / 64.0;
  Video v;
  v.background = uniform(0.10, 0.25);
  for (double& a : v.amplitude) a = uniform(0.45, 0.70);
  v.sigma = uniform(3.0, 4.5) * scale;
  const double lo = 3.0 * v.sigma;
  const double hi = static_cast<double>(o.size) - 1.0 - 3.0 * v.sigma;
  const double x0 = uniform(lo, hi);
  const double y0 = uniform(lo, hi);
  const double speed = uniform(0.3, 0.7) * scale;
  const double heading = uniform(0.0, 2.0 * std::numbers::pi);

  // Separate stream so class 1 does not perturb the shared draws above.
  std::mt19937_64 jitter_rng(rng());
  std::uniform_real_distribution<double> jitter_unit(0.0, 1.0);
  for (std::size_t f = 0; f < o.frames; ++f) {
    double x = x0 + speed * std::cos(heading) * static_cast<double>(f);
    double y = y0 + speed * std::sin(heading) * static_cast<double>(f);
    if (label == 1) {
      const double mag = (5.0 + 4.0 * jitter_unit(jitter_rng)) * scale;
      const double ang = 2.0 * std::numbers::pi * jitter_unit(jitter_rng);
      x += mag * std::cos(ang);
      y += mag * std::sin(ang);
    }
    v.xs.push_back(reflect(x, lo, hi));
    v.ys.push_back(reflect(y, lo, hi));
  }
  return v;
}

Tensor render(const Video& v, std::size_t f, std::size_t size) {
  Tensor img({3, size, size});
  const double inv = 1.0 / (2.0 * v.sigma * v.sigma);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = static_cast<double>(x) - v.xs[f];
      const double dy = static_cast<double>(y) - v.ys[f];
      const double g = std::exp(-(dx * dx + dy * dy) * inv);
      for (std::size_t c = 0; c < 3; ++c) {
        img[(c * size + y) * size + x] =
            std::min(1.0, v.background + v.amplitude[c] * g);
      }
    }
  }
  return img;
}

}  // namespace

Manifest generate_synthetic(std::uint64_t seed, const SynthOptions& options,
                            const std::filesystem::path& out_dir) {
  if (options.per_class < 1) throw ContractError("per_class must be >= 1");
  if (options.frames < 1) throw ContractError("frames must be >= 1");
  if (options.size < 8) throw ContractError("synthetic frames must be >= 8 px");

  Manifest m;
  m.name = "synthetic-motion";
  m.frame_width = m.frame_height = options.size;
  m.root = out_dir;
  std::filesystem::create_directories(out_dir);

  const std::size_t total = 2 * options.per_class;
  for (std::size_t i = 0; i < total; ++i) {
    VideoSample s;
    s.label = static_cast<int>(i % 2);
    char id[32];
    std::snprintf(id, sizeof id, "s%04zu", i);
    s.id = id;
    const Video video = draw_video(seed, i, s.label, options);
    std::filesystem::create_directories(out_dir / s.id);
    for (std::size_t f = 0; f < options.frames; ++f) {
      char name[32];
      std::snprintf(name, sizeof name, "%03zu.ppm", f);
      const std::string rel = s.id + "/" + name;
      write_ppm_file(render(video, f, options.size), out_dir / rel);
      s.frames.push_back(rel);
    }
    m.samples.push_back(std::move(s));
  }
  return m;
}

}  // namespace valdnet
