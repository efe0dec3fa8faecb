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

#include "valdnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <exception>

#include "valdnet/errors.hpp"
#include "valdnet/image.hpp"
#include "valdnet/kernels.hpp"

namespace valdnet {

void TrainConfig::validate() const {
  if (optimizer != "rmsprop") {
    throw ContractError("unsupported optimizer: " + optimizer);
  }
  if (!(learning_rate > 0.0) || batch_size == 0 || epochs == 0 || !(rho > 0.0) ||
      !(epsilon > 0.0)) {
    throw ContractError("training hyperparameters must be positive");
  }
}

std::string Metrics::to_csv() const {
  std::string out = "epoch,train_loss,train_acc,eval_loss,eval_acc,seconds\n";
  char line[160];
  for (const MetricsRow& r : rows) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.epoch,
                  r.train_loss, r.train_acc, r.eval_loss, r.eval_acc, r.seconds);
    out += line;
  }
  return out;
}

PreparedSample prepare_sample(const Manifest& manifest, const VideoSample& sample,
                              const ModelConfig& config, const FlowOptions& flow) {
  const std::size_t total = sample.frames.size();
  const std::size_t size = config.input_size;
  const std::vector<std::size_t> picks = uniform_sample_indices(total, config.frames);
  const bool have_flows = !sample.flows.empty();
  if (have_flows) {
    if (sample.flows.size() != picks.size()) {
      throw DataError("sample " + sample.id + " lists " +
                      std::to_string(sample.flows.size()) + " flows, expected " +
                      std::to_string(picks.size()));
    }
    if (manifest.flow_offset && *manifest.flow_offset !=
                                    static_cast<int>(config.flow_offset)) {
      throw DataError("manifest flows were computed at offset " +
                      std::to_string(*manifest.flow_offset) +
                      ", model expects " + std::to_string(config.flow_offset));
    }
  }

  std::map<std::size_t, Tensor> cache;
  auto frame = [&](std::size_t idx) -> const Tensor& {
    auto it = cache.find(idx);
    if (it == cache.end()) {
      Tensor img = read_ppm_file(manifest.resolve(sample.frames[idx]));
      it = cache.emplace(idx, resize(img, size)).first;
    }
    return it->second;
  };

  PreparedSample out;
  out.id = sample.id;
  out.label = sample.label;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    out.rgb.push_back(frame(picks[i]));
    FlowField field = [&] {
      if (have_flows) return load_flo(manifest.resolve(sample.flows[i]));
      const auto [a, b] = flow_pair_indices(picks[i], config.flow_offset, total);
      const Tensor ga = to_grayscale(frame(a));
      const Tensor gb = to_grayscale(frame(b));
      return estimate_flow(ga, gb, flow);
    }();
    if (field.width() != size || field.height() != size) {
      throw DataError("flow for sample " + sample.id + " is " +
                      std::to_string(field.width()) + "x" +
                      std::to_string(field.height()) + ", model expects " +
                      std::to_string(size));
    }
    out.flow.push_back(flow_to_network_input(field));
  }
  return out;
}

namespace {

// Runs body(i) for i in [0, n) on the data workers, rethrowing the first
// failure (lowest index) on the caller.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::max_threads())
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct ForwardPass {
  std::unique_ptr<Tape> tape;
  Var prob;
};

template <typename Store>
ForwardPass forward(Store& weights, const ModelConfig& config,
                    const PreparedSample& sample, bool use_flow) {
  ForwardPass pass{std::make_unique<Tape>(), {}};
  Bindings bind(*pass.tape, weights);
  std::vector<Var> rgb, flow;
  for (const Tensor& t : sample.rgb) rgb.push_back(pass.tape->constant(t));
  if (use_flow) {
    for (const Tensor& t : sample.flow) flow.push_back(pass.tape->constant(t));
  }
  pass.prob = valdnet_forward(bind, config, rgb, flow, use_flow);
  return pass;
}

}  // namespace

std::vector<PreparedSample> prepare_split(const Manifest& manifest, Split split,
                                          const ModelConfig& config,
                                          const FlowOptions& flow) {
  const std::vector<std::size_t> members = manifest.indices(split);
  std::vector<PreparedSample> out(members.size());
  parallel_for(members.size(), [&](std::size_t i) {
    out[i] = prepare_sample(manifest, manifest.samples[members[i]], config, flow);
  });
  return out;
}

double predict(const WeightStore& weights, const ModelConfig& config,
               const PreparedSample& sample, bool use_flow) {
  ForwardPass pass = forward(weights, config, sample, use_flow);
  return pass.tape->value(pass.prob).item();
}

EvalResult evaluate(const std::vector<PreparedSample>& samples,
                    const WeightStore& weights, const ModelConfig& config,
                    double threshold) {
  if (samples.empty()) throw DataError("evaluation split is empty");
  EvalResult r;
  r.probabilities.resize(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    r.probabilities[i] = predict(weights, config, samples[i]);
  });
  std::size_t correct = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double p = r.probabilities[i];
    loss += bce_loss(p, samples[i].label);
    if ((p >= threshold ? 1 : 0) == samples[i].label) ++correct;
  }
  r.loss = loss / static_cast<double>(samples.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  return r;
}

TrainResult train(const std::vector<PreparedSample>& train_set,
                  const std::vector<PreparedSample>& eval_set,
                  const ModelConfig& model, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  model.validate();
  cfg.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  if (eval_set.empty()) throw DataError("evaluation split is empty");

  TrainResult result{init_model(model, cfg.seed), {}};
  WeightStore& weights = result.weights;
  weights.set_requires_grad(true);
  std::map<std::string, std::vector<double>> accumulators;
  for (const auto& [name, t] : weights) accumulators[name].assign(t.size(), 0.0);

  const RmspropOptions opt{cfg.learning_rate, cfg.rho, cfg.epsilon};
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      std::vector<ForwardPass> passes(n);
      std::vector<Var> losses(n);
      parallel_for(n, [&](std::size_t j) {
        const PreparedSample& s = train_set[order[begin + j]];
        passes[j] = forward(weights, model, s, true);
        losses[j] = passes[j].tape->bce(passes[j].prob, s.label);
        passes[j].tape->propagate(losses[j]);
      });
      // Gradients are summed in batch order, independent of thread count.
      weights.zero_grad();
      for (std::size_t j = 0; j < n; ++j) {
        const PreparedSample& s = train_set[order[begin + j]];
        passes[j].tape->write_parameter_grads();
        loss_sum += passes[j].tape->value(losses[j]).item();
        const double p = passes[j].tape->value(passes[j].prob).item();
        if ((p >= 0.5 ? 1 : 0) == s.label) ++correct;
      }
      passes.clear();
      const double inv = 1.0 / static_cast<double>(n);
      for (auto& [name, t] : weights) {
        std::span<double> g = t.grad();
        for (double& v : g) v *= inv;
        require_finite(g, "parameter gradient");
        rmsprop_step(t.values(), g, accumulators[name], opt);
        require_finite(t.values(), "updated parameter");
      }
    }

    const EvalResult ev = evaluate(eval_set, weights.quantized(), model);
    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train_set.size());
    row.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    row.eval_loss = ev.loss;
    row.eval_acc = ev.accuracy;
    if (cfg.wall_clock) {
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
    }
    result.metrics.rows.push_back(row);
    if (on_epoch && !on_epoch(row)) break;
  }
  weights.set_requires_grad(false);
  return result;
}

TrainResult train(const Manifest& manifest, const ModelConfig& model,
                  const TrainConfig& cfg, const FlowOptions& flow,
                  const EpochCallback& on_epoch) {
  model.validate();
  const auto train_set = prepare_split(manifest, Split::kTrain, model, flow);
  const auto eval_set = prepare_split(manifest, Split::kEval, model, flow);
  return train(train_set, eval_set, model, cfg, on_epoch);
}

}  // namespace valdnet
