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

#ifndef VALDNET_GRADCHECK_HPP_
#define VALDNET_GRADCHECK_HPP_

#include <functional>
#include <span>
#include <vector>

#include "valdnet/tape.hpp"

namespace valdnet {

// Builds a scalar-valued graph on a fresh tape. `inputs` are the tape
// variables bound to the checked tensors, in the same order.
using GraphFn = std::function<Var(Tape&, std::span<const Var> inputs)>;

// Max over every element of every input of
//   |analytic - central| / max(1e-8, |analytic| + |central|).
// The tensors in `inputs` are perturbed in place and restored. Throws
// NumericError on a non-finite evaluation.
double gradient_check(const GraphFn& graph, std::span<Tensor* const> inputs,
                      double eps = 1e-5);

}  // namespace valdnet

#endif  // VALDNET_GRADCHECK_HPP_
