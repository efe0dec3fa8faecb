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

#ifndef VALDNET_TRAIN_HPP_
#define VALDNET_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "valdnet/data.hpp"
#include "valdnet/flow.hpp"
#include "valdnet/model.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {

struct TrainConfig {
  // Only "rmsprop" is implemented.
  std::string optimizer = "rmsprop";
  double learning_rate = 0.001;
  std::size_t batch_size = 4;
  std::size_t epochs = 50;
  double rho = 0.9;
  double epsilon = 1e-7;
  std::uint64_t seed = 1;
  // When false the metrics `seconds` column is written as 0 so that two runs
  // produce byte-identical CSV files.
  bool wall_clock = true;

  void validate() const;
};

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double eval_loss = 0.0;
  double eval_acc = 0.0;
  double seconds = 0.0;
};

struct Metrics {
  std::vector<MetricsRow> rows;

  // Header epoch,train_loss,train_acc,eval_loss,eval_acc,seconds; values with
  // six decimals.
  std::string to_csv() const;
};

// Network-ready tensors for one video: T RGB frames [3,S,S] and T flows
// [2,S,S], gathered at the uniformly sampled indices.
struct PreparedSample {
  std::string id;
  int label = 0;
  std::vector<Tensor> rgb;
  std::vector<Tensor> flow;
};

PreparedSample prepare_sample(const Manifest& manifest, const VideoSample& sample,
                              const ModelConfig& config, const FlowOptions& flow);
// Every sample of `split`, in manifest order. Runs on the data worker pool.
std::vector<PreparedSample> prepare_split(const Manifest& manifest, Split split,
                                          const ModelConfig& config,
                                          const FlowOptions& flow);

double predict(const WeightStore& weights, const ModelConfig& config,
               const PreparedSample& sample, bool use_flow = true);

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> probabilities;
};

// accuracy = fraction of samples with (p >= threshold) == label.
EvalResult evaluate(const std::vector<PreparedSample>& samples,
                    const WeightStore& weights, const ModelConfig& config,
                    double threshold = 0.5);

struct TrainResult {
  WeightStore weights;
  Metrics metrics;
};

// Called after every epoch; returning false ends training early.
using EpochCallback = std::function<bool(const MetricsRow&)>;

// Deterministic under train.seed: initialization, per-epoch shuffling and the
// per-batch gradient sum order are all fixed. Eval metrics use the float32
// weights that the VLDW file will hold.
TrainResult train(const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& eval_set,
                  const ModelConfig& model, const TrainConfig& train,
                  const EpochCallback& on_epoch = {});

TrainResult train(const Manifest& manifest, const ModelConfig& model,
                  const TrainConfig& train, const FlowOptions& flow,
                  const EpochCallback& on_epoch = {});

}  // namespace valdnet

#endif  // VALDNET_TRAIN_HPP_
