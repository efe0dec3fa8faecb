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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "oracles.hpp"
#include "valdnet/data.hpp"
#include "valdnet/errors.hpp"
#include "valdnet/image.hpp"
#include "valdnet/io.hpp"

namespace valdnet {
namespace {

namespace fs = std::filesystem;
using oracle::random_tensor;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() /
                     ("valdnet_data_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

using Indices = std::vector<std::size_t>;
using Pair = std::pair<std::size_t, std::size_t>;

TEST(SamplerTest, Examples) {
  EXPECT_EQ(uniform_sample_indices(41, 12),
            (Indices{0, 4, 7, 11, 15, 18, 22, 25, 29, 33, 36, 40}));
  Indices identity(12);
  for (std::size_t i = 0; i < 12; ++i) identity[i] = i;
  EXPECT_EQ(uniform_sample_indices(12, 12), identity);
  EXPECT_EQ(uniform_sample_indices(6, 12), (Indices{0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5}));
}

TEST(SamplerTest, ExhaustiveInvariants) {
  for (std::size_t n = 2; n <= 100; ++n) {
    for (std::size_t k = 2; k <= 16; ++k) {
      const Indices idx = uniform_sample_indices(n, k);
      ASSERT_EQ(idx.size(), k);
      EXPECT_EQ(idx.front(), 0u);
      EXPECT_EQ(idx.back(), n - 1);
      for (std::size_t i = 1; i < k; ++i) EXPECT_LE(idx[i - 1], idx[i]);
      // Closest-index rounding: |idx_i - i(N-1)/(K-1)| <= 1/2.
      for (std::size_t i = 0; i < k; ++i) {
        const double exact = static_cast<double>(i * (n - 1)) / static_cast<double>(k - 1);
        EXPECT_LE(std::abs(static_cast<double>(idx[i]) - exact), 0.5);
      }
    }
  }
}

TEST(SamplerTest, Errors) {
  EXPECT_THROW(uniform_sample_indices(10, 1), ContractError);
  EXPECT_THROW(uniform_sample_indices(0, 4), ContractError);
}

TEST(FlowPairTest, Examples) {
  EXPECT_EQ(flow_pair_indices(6, 1, 41), Pair(6, 7));
  EXPECT_EQ(flow_pair_indices(6, 3, 41), Pair(6, 9));
  for (std::size_t k = 1; k <= 3; ++k) {
    EXPECT_EQ(flow_pair_indices(40, k, 41), Pair(40, 40));
  }
  EXPECT_THROW(flow_pair_indices(41, 1, 41), ContractError);
}

TEST(FlowPairTest, BoundedAndMonotoneInOffset) {
  for (std::size_t n = 1; n <= 30; ++n)
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t prev = 0;
      for (std::size_t k = 1; k <= 3; ++k) {
        const auto [a, b] = flow_pair_indices(t, k, n);
        EXPECT_EQ(a, t);
        EXPECT_LE(b, n - 1);
        EXPECT_GE(b, prev);
        prev = b;
      }
    }
}

Manifest balanced(std::size_t per_class) {
  Manifest m;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    VideoSample s;
    s.id = "v" + std::to_string(i);
    s.label = static_cast<int>(i % 2);
    s.frames = {"a.ppm"};
    m.samples.push_back(s);
  }
  return m;
}

std::size_t count(const Manifest& m, Split split, int label) {
  std::size_t n = 0;
  for (const VideoSample& s : m.samples) n += s.split == split && s.label == label;
  return n;
}

TEST(SplitTest, EightyTwentyPerClass) {
  const Manifest m = split_dataset(balanced(50), 7);
  EXPECT_EQ(m.indices(Split::kTrain).size(), 80u);
  EXPECT_EQ(m.indices(Split::kEval).size(), 20u);
  for (int label : {0, 1}) {
    EXPECT_EQ(count(m, Split::kTrain, label), 40u);
    EXPECT_EQ(count(m, Split::kEval, label), 10u);
  }
}

TEST(SplitTest, SmallClassesFloor) {
  const Manifest m = split_dataset(balanced(5), 3);
  for (int label : {0, 1}) {
    EXPECT_EQ(count(m, Split::kTrain, label), 4u);
    EXPECT_EQ(count(m, Split::kEval, label), 1u);
  }
}

TEST(SplitTest, DeterministicAndSeedDependent) {
  const Manifest a = split_dataset(balanced(50), 11);
  const Manifest b = split_dataset(balanced(50), 11);
  const Manifest c = split_dataset(balanced(50), 12);
  EXPECT_EQ(a.indices(Split::kEval), b.indices(Split::kEval));
  EXPECT_NE(a.indices(Split::kEval), c.indices(Split::kEval));
}

TEST(SplitTest, TooFewSamplesIsAnError) {
  EXPECT_THROW(split_dataset(balanced(4), 1), DataError);
}

TEST(PpmTest, WhitePixel) {
  const std::string bytes = std::string("P6\n1 1\n255\n") + "\xff\xff\xff";
  const Tensor t = load_ppm(bytes);
  EXPECT_EQ(t, Tensor({3, 1, 1}, 1.0));
  EXPECT_EQ(write_ppm(t), bytes);
}

TEST(PpmTest, RoundTripAndComments) {
  std::mt19937_64 rng(1);
  Tensor img({3, 4, 5});
  for (double& v : img.values()) v = std::uniform_int_distribution<int>(0, 255)(rng) / 255.0;
  const std::string bytes = write_ppm(img);
  EXPECT_EQ(load_ppm(bytes), img);
  EXPECT_EQ(write_ppm(load_ppm(bytes)), bytes);
  const std::string commented = "P6\n# made by hand\n5 4\n255\n" + bytes.substr(bytes.size() - 60);
  EXPECT_EQ(load_ppm(commented), img);
}

TEST(PpmTest, FormatErrors) {
  EXPECT_THROW(load_ppm(std::string("P5\n1 1\n255\n") + "\xff"), FormatError);
  EXPECT_THROW(load_ppm(std::string("P6\n1 1\n65535\n") + "\xff\xff\xff"), FormatError);
  EXPECT_THROW(load_ppm(std::string("P6\n2 1\n255\n") + "\xff\xff\xff"), FormatError);
  EXPECT_THROW(load_ppm("P6\n"), FormatError);
}

TEST(ResizeTest, BoxAverageAndIdentity) {
  Tensor img({1, 2, 2}, {0.0, 1.0, 0.5, 0.5});
  EXPECT_EQ(resize(img, 1), Tensor({1, 1, 1}, 0.5));
  EXPECT_EQ(resize(img, 2), img);
  EXPECT_EQ(resize(Tensor({3, 5, 5}, 0.25), 3), Tensor({3, 3, 3}, 0.25));
}

TEST(ManifestTest, JsonRoundTrip) {
  Manifest m = split_dataset(balanced(5), 1);
  m.name = "demo";
  m.frame_width = 64;
  m.frame_height = 48;
  m.flow_offset = 2;
  m.samples[0].flows = {"v0/f0.flo"};
  const Manifest back = manifest_from_json(manifest_to_json(m), "/data");
  EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
  EXPECT_EQ(back.resolve("x.ppm"), fs::path("/data/x.ppm"));
  EXPECT_EQ(back.resolve("/abs/x.ppm"), fs::path("/abs/x.ppm"));
}

TEST(ManifestTest, RejectsMalformed) {
  EXPECT_THROW(manifest_from_json("{", "."), FormatError);
  EXPECT_THROW(manifest_from_json(R"({"name":"x","frame_size":[1,1],"samples":[
      {"id":"a","frames":["a"],"label":3,"split":"train"}]})", "."),
               FormatError);
}

TEST(SyntheticTest, DeterministicFiles) {
  SynthOptions o{.per_class = 2, .frames = 6, .size = 16};
  const fs::path a = scratch("a"), b = scratch("b");
  const Manifest ma = generate_synthetic(5, o, a);
  const Manifest mb = generate_synthetic(5, o, b);
  ASSERT_EQ(ma.samples.size(), 4u);
  for (std::size_t i = 0; i < ma.samples.size(); ++i) {
    ASSERT_EQ(ma.samples[i].frames.size(), 6u);
    for (const std::string& f : ma.samples[i].frames) {
      EXPECT_EQ(read_file(ma.resolve(f)), read_file(mb.resolve(f))) << f;
    }
  }
  const Manifest mc = generate_synthetic(6, o, scratch("c"));
  EXPECT_NE(read_file(mc.resolve(mc.samples[0].frames[0])),
            read_file(ma.resolve(ma.samples[0].frames[0])));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(SyntheticTest, BalancedAndAppearanceMatched) {
  SynthOptions o{.per_class = 50, .frames = 8, .size = 16};
  const fs::path dir = scratch("bal");
  const Manifest m = generate_synthetic(1, o, dir);
  ASSERT_EQ(m.samples.size(), 100u);
  double sum[2] = {0.0, 0.0};
  std::size_t n[2] = {0, 0};
  for (const VideoSample& s : m.samples) {
    for (const std::string& f : s.frames) {
      const Tensor frame = read_ppm_file(m.resolve(f));
      for (double v : frame.values()) {
        sum[s.label] += v;
        ++n[s.label];
      }
    }
  }
  EXPECT_EQ(n[0], n[1]);
  const double m0 = sum[0] / static_cast<double>(n[0]);
  const double m1 = sum[1] / static_cast<double>(n[1]);
  EXPECT_LT(std::abs(m0 - m1) / std::max(m0, m1), 0.02);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace valdnet
