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
#include <filesystem>
#include <random>

#include <unistd.h>

#include "oracles.hpp"
#include "valdnet/errors.hpp"
#include "valdnet/io.hpp"
#include "valdnet/kernels.hpp"
#include "valdnet/model.hpp"
#include "valdnet/tape.hpp"
#include "valdnet/train.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {
namespace {

namespace fs = std::filesystem;
using oracle::random_tensor;

ModelConfig tiny_config(std::size_t size = 8, std::size_t frames = 4) {
  ModelConfig c;
  c.input_size = size;
  for (BackboneConfig* b : {&c.rgb, &c.flow}) {
    b->input_size = size;
    b->stem_filters = 4;
    b->stages = {{1, 4, 1, 1}};
    b->se_reduction = 4;
    b->feature_dim = 4;
  }
  c.hidden = 4;
  c.fc = {8, 4, 1};
  c.frames = frames;
  return c;
}

PreparedSample random_sample(const ModelConfig& c, std::mt19937_64& rng, int label) {
  PreparedSample s;
  s.id = "r";
  s.label = label;
  for (std::size_t i = 0; i < c.frames; ++i) {
    s.rgb.push_back(random_tensor({3, c.input_size, c.input_size}, rng, 0.0, 1.0));
    s.flow.push_back(random_tensor({2, c.input_size, c.input_size}, rng));
  }
  return s;
}

TEST(FuseSumTest, Identities) {
  std::mt19937_64 rng(1);
  const Tensor a = random_tensor({5}, rng), b = random_tensor({5}, rng);
  Tape t;
  const Var va = t.constant(a), vb = t.constant(b), zero = t.constant(Tensor({5}));
  EXPECT_EQ(t.value(fuse_sum(t, va, zero)), a);
  EXPECT_EQ(t.value(fuse_sum(t, va, vb)), t.value(fuse_sum(t, vb, va)));
  const Tensor twice = t.value(fuse_sum(t, va, va));
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(twice[i], 2.0 * a[i]);
  EXPECT_THROW(fuse_sum(t, va, t.constant(Tensor({4}))), DimensionError);
}

TEST(ForwardTest, OutputInOpenUnitInterval) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const WeightStore w = init_model(c, rng());
    const double p = predict(w, c, random_sample(c, rng, 0));
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(ForwardTest, ZeroFinalLayerGivesOneHalf) {
  const ModelConfig c = tiny_config();
  WeightStore w = init_model(c, 3);
  for (const char* n : {"head.2.W", "head.2.b"}) {
    for (double& v : w.at(n).values()) v = 0.0;
  }
  std::mt19937_64 rng(3);
  EXPECT_EQ(predict(w, c, random_sample(c, rng, 1)), 0.5);
}

TEST(ForwardTest, StreamAblationIdentity) {
  const ModelConfig c = tiny_config();
  WeightStore w = init_model(c, 4);
  for (const char* n : {"flow.top.conv_kernel", "flow.top.conv_bias"}) {
    for (double& v : w.at(n).values()) v = 0.0;
  }
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const PreparedSample s = random_sample(c, rng, 0);
    EXPECT_EQ(predict(w, c, s, true), predict(w, c, s, false));
  }
}

TEST(ForwardTest, CheckedInputs) {
  const ModelConfig c = tiny_config();
  const WeightStore w = init_model(c, 5);
  std::mt19937_64 rng(5);
  PreparedSample s = random_sample(c, rng, 0);
  s.flow.pop_back();
  EXPECT_THROW(predict(w, c, s), DimensionError);
}

TEST(ModelParamsTest, NamesAndDeterministicInit) {
  const ModelConfig c = ModelConfig::micro();
  c.validate();
  const WeightStore a = init_model(c, 9), b = init_model(c, 9), d = init_model(c, 10);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == d);
  for (const char* n : {"rgb.stem.conv_kernel", "flow.1.0.se_w1", "rnn.fwd.z.W",
                        "rnn.bwd.h.b", "head.0.W", "head.2.b"}) {
    EXPECT_TRUE(a.contains(n)) << n;
  }
  ModelConfig lstm = c;
  lstm.cell = CellKind::kLstm;
  EXPECT_TRUE(init_model(lstm, 1).contains("rnn.fwd.f.U"));
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c = ModelConfig::micro();
  c.flow_offset = 4;
  EXPECT_THROW(c.validate(), ContractError);
  c = ModelConfig::micro();
  c.fc = {8, 2};
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(BceTest, Examples) {
  EXPECT_NEAR(bce_loss(0.5, 0), std::log(2.0), 1e-15);
  EXPECT_NEAR(bce_loss(0.5, 1), 0.693147, 1e-6);
  EXPECT_NEAR(bce_loss(1.0 - 1e-7, 1), 1e-7, 1e-12);
  EXPECT_NEAR(bce_loss(1e-7, 1), 16.118, 1e-3);
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1)));
  EXPECT_TRUE(std::isfinite(bce_loss(1.0, 0)));
}

TEST(RmspropTest, Examples) {
  std::vector<double> p = {0.0}, acc = {0.0};
  const std::vector<double> one = {1.0}, zero = {0.0};
  rmsprop_step(p, one, acc, {});
  EXPECT_NEAR(acc[0], 0.1, 1e-15);
  EXPECT_NEAR(p[0], -0.001 / (std::sqrt(0.1) + 1e-7), 1e-15);
  EXPECT_NEAR(p[0], -0.00316228, 1e-8);

  const double before = p[0];
  rmsprop_step(p, zero, acc, {});
  EXPECT_EQ(p[0], before);
  EXPECT_NEAR(acc[0], 0.09, 1e-15);

  rmsprop_step(p, one, acc, {.learning_rate = 0.0});
  EXPECT_EQ(p[0], before);
}

TEST(VldwTest, RoundTripIsBitIdentical) {
  const WeightStore w = init_model(ModelConfig::micro(), 11);
  const std::string bytes = encode_vldw(w);
  EXPECT_EQ(bytes.substr(0, 4), "VLDW");
  const WeightStore back = decode_vldw(bytes);
  EXPECT_EQ(back, w.quantized());
  EXPECT_EQ(encode_vldw(back), bytes);
  EXPECT_EQ(back.quantized(), back);
}

TEST(VldwTest, HandBuiltEntry) {
  WeightStore w;
  w.insert("a", Tensor({2}, {1.0, -2.0}));
  const std::string bytes = encode_vldw(w);
  const std::string expected = std::string("VLDW") + std::string("\x01\0\0\0", 4) +
                               std::string("\x01\0\0\0", 4) + std::string("\x01\0\0\0", 4) +
                               "a" + std::string("\x01\0\0\0", 4) +
                               std::string("\x02\0\0\0", 4) +
                               std::string("\0\0\x80\x3f", 4) + std::string("\0\0\0\xc0", 4);
  EXPECT_EQ(bytes, expected);
}

TEST(VldwTest, FormatErrors) {
  const std::string good = encode_vldw(init_model(tiny_config(), 1));
  EXPECT_THROW(decode_vldw("VLDX" + good.substr(4)), FormatError);
  EXPECT_THROW(decode_vldw(good.substr(0, good.size() - 2)), FormatError);
  EXPECT_THROW(decode_vldw(good + "z"), FormatError);
  std::string version = good;
  version[4] = 2;
  EXPECT_THROW(decode_vldw(version), FormatError);
}

TEST(EvaluateTest, PerfectAndTieRule) {
  const ModelConfig c = tiny_config();
  WeightStore w = init_model(c, 12);
  for (const char* n : {"head.2.W", "head.2.b"}) {
    for (double& v : w.at(n).values()) v = 0.0;
  }
  std::mt19937_64 rng(12);
  std::vector<PreparedSample> samples;
  for (int i = 0; i < 8; ++i) samples.push_back(random_sample(c, rng, i % 2));
  EvalResult r = evaluate(samples, w, c);
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  for (double p : r.probabilities) EXPECT_EQ(p, 0.5);

  // p = 0.5 everywhere and the >= rule calls it positive, so a set of
  // positives is classified perfectly.
  std::vector<PreparedSample> positives;
  for (const auto& s : samples)
    if (s.label == 1) positives.push_back(s);
  EXPECT_EQ(evaluate(positives, w, c).accuracy, 1.0);
  EXPECT_THROW(evaluate({}, w, c), DataError);
}

TEST(TrainTest, DeterministicUnderSeed) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(13);
  std::vector<PreparedSample> tr, ev;
  for (int i = 0; i < 6; ++i) tr.push_back(random_sample(c, rng, i % 2));
  for (int i = 0; i < 2; ++i) ev.push_back(random_sample(c, rng, i % 2));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.wall_clock = false;
  const TrainResult a = train(tr, ev, c, cfg);
  const TrainResult b = train(tr, ev, c, cfg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.metrics.to_csv(), b.metrics.to_csv());
  cfg.seed = 2;
  EXPECT_FALSE(train(tr, ev, c, cfg).weights == a.weights);
}

TEST(TrainTest, ThreadCountDoesNotChangeResults) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(14);
  std::vector<PreparedSample> tr, ev;
  for (int i = 0; i < 8; ++i) tr.push_back(random_sample(c, rng, i % 2));
  ev.push_back(random_sample(c, rng, 1));
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.wall_clock = false;
  const int saved = kernels::max_threads();
  kernels::set_max_threads(1);
  const TrainResult one = train(tr, ev, c, cfg);
  kernels::set_max_threads(3);
  const TrainResult three = train(tr, ev, c, cfg);
  kernels::set_max_threads(saved);
  EXPECT_EQ(one.weights, three.weights);
}

TEST(TrainTest, CallbackStopsEarly) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(15);
  std::vector<PreparedSample> tr = {random_sample(c, rng, 0), random_sample(c, rng, 1)};
  TrainConfig cfg;
  cfg.epochs = 10;
  const TrainResult r = train(tr, tr, c, cfg, [](const MetricsRow& row) { return row.epoch < 2; });
  EXPECT_EQ(r.metrics.rows.size(), 2u);
}

TEST(TrainTest, RejectsEmptySplitsAndBadConfig) {
  const ModelConfig c = tiny_config();
  std::mt19937_64 rng(16);
  const std::vector<PreparedSample> one = {random_sample(c, rng, 0)};
  EXPECT_THROW(train({}, one, c, {}), DataError);
  EXPECT_THROW(train(one, {}, c, {}), DataError);
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(train(one, one, c, bad), ContractError);
}

TEST(MetricsTest, CsvLayout) {
  Metrics m;
  m.rows.push_back({1, 0.5, 0.25, 0.75, 1.0, 2.5});
  EXPECT_EQ(m.to_csv(),
            "epoch,train_loss,train_acc,eval_loss,eval_acc,seconds\n"
            "1,0.500000,0.250000,0.750000,1.000000,2.500000\n");
}

class SyntheticTrainTest : public ::testing::Test {
 protected:
  static fs::path dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() /
                       ("valdnet_model_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
  }
};

// 20 samples of 8x8 frames, 5 epochs.
TEST_F(SyntheticTrainTest, MicroRunReducesTrainLoss) {
  const fs::path d = dir("micro");
  Manifest m = generate_synthetic(3, {.per_class = 10, .frames = 12, .size = 8}, d);
  m = split_dataset(std::move(m), 3);
  const ModelConfig c = tiny_config(8, 6);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.003;
  const TrainResult r = train(m, c, cfg, {.alpha = 15.0, .iterations = 50});
  ASSERT_EQ(r.metrics.rows.size(), 5u);
  EXPECT_LT(r.metrics.rows.back().train_loss, r.metrics.rows.front().train_loss);
  fs::remove_all(d);
}

// Over five seeds the median final-epoch loss sits below the median
// first-epoch loss.
TEST_F(SyntheticTrainTest, MedianLossDecreasesAcrossSeeds) {
  const fs::path d = dir("median");
  Manifest m = generate_synthetic(4, {.per_class = 10, .frames = 12, .size = 8}, d);
  m = split_dataset(std::move(m), 4);
  const ModelConfig c = tiny_config(8, 6);
  const FlowOptions flow{.alpha = 15.0, .iterations = 50};
  const auto tr = prepare_split(m, Split::kTrain, c, flow);
  const auto ev = prepare_split(m, Split::kEval, c, flow);
  std::vector<double> first, last;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.learning_rate = 0.003;
    cfg.seed = seed;
    const TrainResult r = train(tr, ev, c, cfg);
    first.push_back(r.metrics.rows.front().train_loss);
    last.push_back(r.metrics.rows.back().train_loss);
  }
  std::sort(first.begin(), first.end());
  std::sort(last.begin(), last.end());
  EXPECT_LT(last[2], first[2]);
  fs::remove_all(d);
}

TEST_F(SyntheticTrainTest, PredictionIgnoresUnsampledFrames) {
  const fs::path d = dir("relist");
  Manifest m = generate_synthetic(5, {.per_class = 5, .frames = 24, .size = 8}, d);
  m = split_dataset(std::move(m), 5);
  ModelConfig c = tiny_config(8, 12);
  const FlowOptions flow{.alpha = 15.0, .iterations = 20};
  const WeightStore w = init_model(c, 5);
  const VideoSample& s = m.samples[0];
  const double base = predict(w, c, prepare_sample(m, s, c, flow));

  // 24 frames, 12 picks, offset 1: frame 12 is neither sampled nor a partner.
  const auto picks = uniform_sample_indices(24, 12);
  ASSERT_EQ(std::count(picks.begin(), picks.end(), 12u), 0);
  for (std::size_t p : picks) ASSERT_NE(flow_pair_indices(p, 1, 24).second, 12u);
  VideoSample relisted = s;
  relisted.frames[12] = m.samples[1].frames[3];
  EXPECT_EQ(predict(w, c, prepare_sample(m, relisted, c, flow)), base);

  Manifest reordered = m;
  std::reverse(reordered.samples.begin(), reordered.samples.end());
  EXPECT_EQ(predict(w, c, prepare_sample(reordered, reordered.samples.back(), c, flow)), base);
  fs::remove_all(d);
}

TEST_F(SyntheticTrainTest, PrecomputedFlowsMustMatch) {
  const fs::path d = dir("flows");
  Manifest m = generate_synthetic(6, {.per_class = 5, .frames = 8, .size = 8}, d);
  const ModelConfig c = tiny_config(8, 4);
  VideoSample s = m.samples[0];
  s.flows = {"missing.flo"};
  EXPECT_THROW(prepare_sample(m, s, c, {}), DataError);
  fs::remove_all(d);
}

}  // namespace
}  // namespace valdnet
