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

#include "valdnet/gradsuite.hpp"

#include <functional>
#include <random>

#include "valdnet/backbone.hpp"
#include "valdnet/gradcheck.hpp"
#include "valdnet/model.hpp"
#include "valdnet/recurrent.hpp"

namespace valdnet {

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Values in +-[0.2, 1] keep relu away from its kink.
Tensor off_zero_tensor(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::bernoulli_distribution sign(0.5);
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = sign(rng) ? mag(rng) : -mag(rng);
  return t;
}

// Scalar projection sum(out ⊙ weights) with fixed random weights.
Var project(Tape& t, Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Var w = t.constant(random_tensor(t.value(out).shape(), rng));
  return t.sum(t.mul(out, w));
}

struct Suite {
  std::vector<GradCheckCase> cases;
  std::mt19937_64 rng{20260101};

  void check(const std::string& name, double threshold, std::vector<Tensor> inputs,
             const std::function<Var(Tape&, std::span<const Var>)>& graph) {
    std::vector<Tensor*> ptrs;
    for (Tensor& t : inputs) ptrs.push_back(&t);
    cases.push_back({name, gradient_check(graph, ptrs), threshold});
  }
};

void single_ops(Suite& s) {
  auto& rng = s.rng;
  const double tol = kSingleOpTolerance;
  s.check("conv2d valid stride1", tol,
          {random_tensor({2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.conv2d(v[0], v[1], 1, Padding::kValid), 1);
          });
  s.check("conv2d same stride2", tol,
          {random_tensor({2, 5, 6}, rng), random_tensor({2, 2, 3, 3}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.conv2d(v[0], v[1], 2, Padding::kSame), 2);
          });
  s.check("conv2d 1x4x4 seeded", tol,
          {random_tensor({1, 4, 4}, rng), random_tensor({1, 1, 3, 3}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.conv2d(v[0], v[1], 1, Padding::kSame), 3);
          });
  s.check("depthwise_conv2d same stride1", tol,
          {random_tensor({2, 4, 4}, rng), random_tensor({2, 3, 3}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.depthwise_conv2d(v[0], v[1], 1, Padding::kSame), 4);
          });
  s.check("depthwise_conv2d same stride2", tol,
          {random_tensor({3, 5, 5}, rng), random_tensor({3, 3, 3}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.depthwise_conv2d(v[0], v[1], 2, Padding::kSame), 5);
          });
  s.check("matmul 2x2", tol, {random_tensor({2, 2}, rng), random_tensor({2, 2}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.matmul(v[0], v[1]), 6);
          });
  s.check("matvec", tol, {random_tensor({3, 4}, rng), random_tensor({4}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.matvec(v[0], v[1]), 7);
          });
  s.check("add broadcast", tol,
          {random_tensor({2, 3, 3}, rng), random_tensor({2, 1, 1}, rng)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.add(v[0], v[1]), 8); });
  s.check("sub", tol, {random_tensor({4}, rng), random_tensor({4}, rng)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.sub(v[0], v[1]), 9); });
  s.check("mul broadcast", tol,
          {random_tensor({2, 3, 3}, rng), random_tensor({2, 1, 1}, rng)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.mul(v[0], v[1]), 10); });
  s.check("sigmoid", tol, {random_tensor({6}, rng, -3, 3)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.sigmoid(v[0]), 11); });
  s.check("tanh", tol, {random_tensor({6}, rng, -2, 2)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.tanh(v[0]), 12); });
  s.check("swish", tol, {random_tensor({6}, rng, -3, 3)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.swish(v[0]), 13); });
  s.check("relu", tol, {off_zero_tensor({6}, rng)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.relu(v[0]), 14); });
  s.check("global_avg_pool", tol, {random_tensor({3, 2, 4}, rng)},
          [](Tape& t, std::span<const Var> v) {
            return project(t, t.global_avg_pool(v[0]), 15);
          });
  s.check("mean_rows", tol, {random_tensor({3, 4}, rng)},
          [](Tape& t, std::span<const Var> v) { return project(t, t.mean_rows(v[0]), 16); });
  s.check("concat/stack/row", tol, {random_tensor({3}, rng), random_tensor({2}, rng)},
          [](Tape& t, std::span<const Var> v) {
            const Var c = t.concat(v);
            const Var parts[2] = {c, t.affine(c, 2.0, 0.5)};
            return project(t, t.row(t.stack(parts), 1), 17);
          });
  s.check("bce", tol, {Tensor({1}, {0.3})},
          [](Tape& t, std::span<const Var> v) { return t.bce(v[0], 1.0); });
}

// Checks `body` with respect to every tensor of `store` plus `inputs`.
void check_store(Suite& s, const std::string& name, double threshold,
                 WeightStore store, std::vector<Tensor> inputs,
                 const std::function<Var(Bindings&, std::span<const Var>)>& body) {
  std::vector<std::string> names;
  std::vector<Tensor*> ptrs;
  for (auto& [n, t] : store) {
    names.push_back(n);
    ptrs.push_back(&t);
  }
  for (Tensor& t : inputs) ptrs.push_back(&t);
  const GraphFn graph = [&](Tape& t, std::span<const Var> vars) {
    Bindings bind(t, store);
    for (std::size_t i = 0; i < names.size(); ++i) bind.preset(names[i], vars[i]);
    return body(bind, vars.subspan(names.size()));
  };
  s.cases.push_back({name, gradient_check(graph, ptrs), threshold});
}

// Initialized store with every tensor (biases and scales too) re-drawn so no
// parameter sits at a special value.
WeightStore random_store(const std::vector<ParamSpec>& specs, std::mt19937_64& rng) {
  WeightStore store = WeightStore::initialize(specs, rng());
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (auto& [n, t] : store) {
    for (double& v : t.values()) v += jitter(rng);
  }
  return store;
}

void composites(Suite& s) {
  auto& rng = s.rng;
  const double tol = kCompositeTolerance;

  check_store(s, "squeeze_excite", tol, random_store(squeeze_excite_params(4, 2, "se."), rng),
              {random_tensor({4, 3, 3}, rng)}, [](Bindings& b, std::span<const Var> in) {
                return project(b.tape(), squeeze_excite(b, "se.", in[0]), 21);
              });

  const MbconvShape skip{.in_channels = 4, .out_channels = 4, .expansion = 2,
                         .stride = 1, .se_reduction = 4};
  check_store(s, "mbconv stride1 skip", tol, random_store(mbconv_params(skip, "b."), rng),
              {random_tensor({4, 5, 5}, rng)}, [skip](Bindings& b, std::span<const Var> in) {
                return project(b.tape(), mbconv_forward(b, "b.", skip, in[0]), 22);
              });

  const MbconvShape down{.in_channels = 3, .out_channels = 5, .expansion = 3,
                         .stride = 2, .se_reduction = 4};
  check_store(s, "mbconv stride2", tol, random_store(mbconv_params(down, "b."), rng),
              {random_tensor({3, 6, 6}, rng)}, [down](Bindings& b, std::span<const Var> in) {
                return project(b.tape(), mbconv_forward(b, "b.", down, in[0]), 23);
              });

  BackboneConfig bb;
  bb.input_channels = 3;
  bb.input_size = 16;
  bb.stem_filters = 4;
  bb.stages = {{1, 4, 1, 1}, {2, 8, 2, 1}};
  bb.feature_dim = 8;
  check_store(s, "backbone 16x16", tol, random_store(backbone_params(bb, "rgb"), rng),
              {random_tensor({3, 16, 16}, rng, 0.0, 1.0)},
              [bb](Bindings& b, std::span<const Var> in) {
                return project(b.tape(), backbone_forward(b, "rgb", bb, in[0]), 24);
              });

  for (CellKind cell : {CellKind::kLstm, CellKind::kGru}) {
    const std::string cname(cell_name(cell));
    check_store(s, cname + " run_sequence T=3", tol,
                random_store(recurrent_params(cell, 3, 2, "rnn"), rng),
                {random_tensor({3, 3}, rng)}, [cell](Bindings& b, std::span<const Var> in) {
                  const RecurrentWeights w = bind_recurrent(b, cell, "rnn");
                  return project(b.tape(), run_sequence(b.tape(), in[0], w), 25);
                });
    std::vector<ParamSpec> both = recurrent_params(cell, 3, 2, "rnn.fwd");
    for (ParamSpec& p : recurrent_params(cell, 3, 2, "rnn.bwd")) both.push_back(p);
    check_store(s, cname + " bidirectional T=3", tol, random_store(both, rng),
                {random_tensor({3, 3}, rng)}, [cell](Bindings& b, std::span<const Var> in) {
                  const RecurrentWeights f = bind_recurrent(b, cell, "rnn.fwd");
                  const RecurrentWeights r = bind_recurrent(b, cell, "rnn.bwd");
                  return project(b.tape(), bidirectional(b.tape(), in[0], f, r), 26);
                });
  }
}

void end_to_end(Suite& s) {
  auto& rng = s.rng;
  ModelConfig cfg = ModelConfig::micro();
  cfg.input_size = 16;
  cfg.rgb.input_size = cfg.flow.input_size = 16;
  cfg.frames = 2;
  std::vector<Tensor> inputs;
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    inputs.push_back(random_tensor({3, 16, 16}, rng, 0.0, 1.0));
  }
  for (std::size_t f = 0; f < cfg.frames; ++f) {
    inputs.push_back(random_tensor({2, 16, 16}, rng, -0.5, 0.5));
  }
  check_store(s, "valdnet micro 2-frame 16x16 bce", kEndToEndTolerance,
              random_store(model_params(cfg), rng), std::move(inputs),
              [cfg](Bindings& b, std::span<const Var> in) {
                const auto rgb = in.subspan(0, cfg.frames);
                const auto flow = in.subspan(cfg.frames, cfg.frames);
                return b.tape().bce(valdnet_forward(b, cfg, rgb, flow), 1.0);
              });
}

}  // namespace

std::vector<GradCheckCase> run_gradient_suite() {
  Suite s;
  single_ops(s);
  composites(s);
  end_to_end(s);
  return s.cases;
}

}  // namespace valdnet
