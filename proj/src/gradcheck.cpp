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

#include "valdnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "valdnet/errors.hpp"

namespace valdnet {

namespace {

double evaluate(const GraphFn& graph, std::span<Tensor* const> inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (Tensor* t : inputs) vars.push_back(tape.parameter(*t));
  const double out = tape.value(graph(tape, vars)).item();
  if (!std::isfinite(out)) throw NumericError("gradient_check: non-finite output");
  return out;
}

}  // namespace

double gradient_check(const GraphFn& graph, std::span<Tensor* const> inputs,
                      double eps) {
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (Tensor* t : inputs) vars.push_back(tape.parameter(*t));
    const Var loss = graph(tape, vars);
    tape.propagate(loss);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      std::span<const double> g = tape.grad(vars[i]);
      if (g.empty()) {
        analytic.emplace_back(inputs[i]->size(), 0.0);
      } else {
        analytic.emplace_back(g.begin(), g.end());
      }
    }
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::span<double> values = inputs[i]->values();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double up = evaluate(graph, inputs);
      values[j] = saved - eps;
      const double down = evaluate(graph, inputs);
      values[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[i][j];
      const double err =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace valdnet
