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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "valdnet/backbone.hpp"
#include "valdnet/errors.hpp"
#include "valdnet/gradcheck.hpp"
#include "valdnet/tape.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {
namespace {

using oracle::random_tensor;

WeightStore zero_store(const std::vector<ParamSpec>& specs) {
  WeightStore s = WeightStore::initialize(specs, 0);
  for (auto& [name, t] : s) std::fill(t.values().begin(), t.values().end(), 0.0);
  return s;
}

Tensor se_apply(const WeightStore& store, const Tensor& x) {
  Tape t;
  Bindings b(t, store);
  return t.value(squeeze_excite(b, "se.", t.constant(x)));
}

TEST(SqueezeExciteTest, ZeroInputStaysZero) {
  const WeightStore store = WeightStore::initialize(squeeze_excite_params(4, 1, "se."), 3);
  EXPECT_EQ(se_apply(store, Tensor({4, 3, 3})), Tensor({4, 3, 3}));
}

TEST(SqueezeExciteTest, SaturatedGate) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({4, 3, 3}, rng);
  WeightStore open = zero_store(squeeze_excite_params(4, 1, "se."));
  for (double& v : open.at("se.se_b2").values()) v = 20.0;
  const Tensor y = se_apply(open, x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-8);

  WeightStore closed = open;
  for (double& v : closed.at("se.se_b2").values()) v = -20.0;
  const Tensor z = se_apply(closed, x);
  double norm = 0.0;
  for (double v : x.values()) norm += v * v;
  for (double v : z.values()) EXPECT_LE(std::abs(v), 1e-8 * std::sqrt(norm));
}

TEST(SqueezeExciteTest, NeverIncreasesChannelMaxNorm) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightStore store =
        WeightStore::initialize(squeeze_excite_params(3, 2, "se."), rng());
    const Tensor x = random_tensor({3, 4, 4}, rng, -3.0, 3.0);
    const Tensor y = se_apply(store, x);
    for (std::size_t c = 0; c < 3; ++c) {
      double xin = 0.0, yout = 0.0;
      for (std::size_t i = 0; i < 16; ++i) {
        xin = std::max(xin, std::abs(x[c * 16 + i]));
        yout = std::max(yout, std::abs(y[c * 16 + i]));
      }
      EXPECT_LE(yout, xin);
    }
  }
}

TEST(MbconvTest, ZeroBranchKeepsSkip) {
  const MbconvShape shape{.in_channels = 4, .out_channels = 4, .expansion = 4,
                          .stride = 1, .se_reduction = 4};
  ASSERT_TRUE(shape.has_skip());
  const WeightStore store = zero_store(mbconv_params(shape, "b."));
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor({4, 5, 5}, rng);
  Tape t;
  Bindings b(t, store);
  EXPECT_EQ(t.value(mbconv_forward(b, "b.", shape, t.constant(x))), x);
}

TEST(MbconvTest, StrideTwoHalvesExtents) {
  const MbconvShape shape{.in_channels = 3, .out_channels = 6, .expansion = 2,
                          .stride = 2, .se_reduction = 4};
  EXPECT_FALSE(shape.has_skip());
  EXPECT_EQ(shape.squeezed(), 1u);
  const WeightStore store = WeightStore::initialize(mbconv_params(shape, "b."), 4);
  std::mt19937_64 rng(4);
  Tape t;
  Bindings b(t, store);
  EXPECT_EQ(t.value(mbconv_forward(b, "b.", shape, t.constant(random_tensor({3, 7, 6}, rng))))
                .shape(),
            (Shape{6, 4, 3}));
}

TEST(MbconvTest, ExpansionOneHasNoExpandTensors) {
  const MbconvShape shape{.in_channels = 4, .out_channels = 4, .expansion = 1,
                          .stride = 1, .se_reduction = 4};
  for (const ParamSpec& p : mbconv_params(shape, "b.")) {
    EXPECT_EQ(p.name.find("expand"), std::string::npos) << p.name;
  }
}

TEST(MbconvTest, SingleBlockGradientCheck) {
  const MbconvShape shape{.in_channels = 2, .out_channels = 3, .expansion = 2,
                          .stride = 1, .se_reduction = 2};
  WeightStore store = WeightStore::initialize(mbconv_params(shape, "b."), 5);
  std::mt19937_64 rng(5);
  for (auto& [name, t] : store) {
    for (double& v : t.values()) v += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
  }
  Tensor x = random_tensor({2, 4, 4}, rng);
  std::vector<std::string> names;
  std::vector<Tensor*> inputs;
  for (auto& [name, t] : store) {
    names.push_back(name);
    inputs.push_back(&t);
  }
  inputs.push_back(&x);
  const Tensor proj = random_tensor({3, 4, 4}, rng);
  const double err = gradient_check(
      [&](Tape& t, std::span<const Var> v) {
        Bindings b(t, store);
        for (std::size_t i = 0; i < names.size(); ++i) b.preset(names[i], v[i]);
        const Var y = mbconv_forward(b, "b.", shape, v.back());
        return t.sum(t.mul(y, t.constant(proj)));
      },
      inputs);
  EXPECT_LT(err, 1e-4);
}

TEST(BackboneTest, DefaultConfigFeatureLength) {
  const BackboneConfig cfg;
  const WeightStore store = WeightStore::initialize(backbone_params(cfg, "rgb"), 6);
  std::mt19937_64 rng(6);
  Tape t;
  Bindings b(t, store);
  const Tensor frame = random_tensor({3, 64, 64}, rng, 0.0, 1.0);
  const Var f1 = backbone_forward(b, "rgb", cfg, t.constant(frame));
  const Var f2 = backbone_forward(b, "rgb", cfg, t.constant(frame));
  EXPECT_EQ(t.value(f1).shape(), (Shape{32}));
  EXPECT_EQ(t.value(f1), t.value(f2));
  EXPECT_THROW(backbone_forward(b, "rgb", cfg, t.constant(Tensor({3, 32, 32}))),
               DimensionError);
}

TEST(BackboneTest, WeightNamesFollowStageBlockScheme) {
  const BackboneConfig cfg;
  const auto specs = backbone_params(cfg, "rgb");
  auto has = [&](const std::string& n) {
    return std::any_of(specs.begin(), specs.end(),
                       [&](const ParamSpec& p) { return p.name == n; });
  };
  EXPECT_TRUE(has("rgb.stem.conv_kernel"));
  EXPECT_TRUE(has("rgb.0.0.dw_kernel"));
  EXPECT_TRUE(has("rgb.2.1.project_kernel"));
  EXPECT_TRUE(has("rgb.top.conv_kernel"));
  EXPECT_FALSE(has("rgb.0.0.expand_kernel"));
}

BackboneConfig small_config() {
  BackboneConfig cfg;
  cfg.input_size = 16;
  cfg.stem_filters = 4;
  cfg.stages = {{1, 4, 1, 1}, {2, 8, 2, 1}};
  cfg.feature_dim = 6;
  return cfg;
}

TEST(TimeDistributedTest, RowsMatchSingleFrames) {
  const BackboneConfig cfg = small_config();
  const WeightStore store = WeightStore::initialize(backbone_params(cfg, "rgb"), 7);
  std::mt19937_64 rng(7);
  std::vector<Tensor> frames;
  for (int i = 0; i < 4; ++i) frames.push_back(random_tensor({3, 16, 16}, rng, 0.0, 1.0));

  Tape t;
  Bindings b(t, store);
  std::vector<Var> vars;
  for (const Tensor& f : frames) vars.push_back(t.constant(f));
  const Tensor batched = t.value(time_distributed(b, "rgb", cfg, vars));
  ASSERT_EQ(batched.shape(), (Shape{4, 6}));

  std::vector<std::size_t> perm = {2, 0, 3, 1};
  std::vector<Var> permuted;
  for (std::size_t p : perm) permuted.push_back(vars[p]);
  const Tensor shuffled = t.value(time_distributed(b, "rgb", cfg, permuted));

  for (std::size_t i = 0; i < 4; ++i) {
    const Tensor single = t.value(backbone_forward(b, "rgb", cfg, vars[i]));
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(batched.at({i, j}), single[j]);
      EXPECT_EQ(shuffled.at({i, j}), batched.at({perm[i], j}));
    }
  }
  const Var one[] = {vars[0]};
  const Tensor t1 = t.value(time_distributed(b, "rgb", cfg, one));
  EXPECT_EQ(t1.reshaped({6}), t.value(backbone_forward(b, "rgb", cfg, vars[0])));
}

TEST(TimeDistributedTest, TwelveDefaultFrames) {
  const BackboneConfig cfg;
  const WeightStore store = WeightStore::initialize(backbone_params(cfg, "rgb"), 8);
  std::mt19937_64 rng(8);
  Tape t;
  Bindings b(t, store);
  std::vector<Var> vars;
  for (int i = 0; i < 12; ++i) vars.push_back(t.constant(random_tensor({3, 64, 64}, rng)));
  EXPECT_EQ(t.value(time_distributed(b, "rgb", cfg, vars)).shape(), (Shape{12, 32}));
}

TEST(BackboneConfigTest, RejectsEmptyStages) {
  BackboneConfig cfg;
  cfg.stages.clear();
  EXPECT_THROW(cfg.validate(), ContractError);
}

}  // namespace
}  // namespace valdnet
