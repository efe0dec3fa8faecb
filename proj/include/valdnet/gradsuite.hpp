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

#ifndef VALDNET_GRADSUITE_HPP_
#define VALDNET_GRADSUITE_HPP_

#include <string>
#include <vector>

namespace valdnet {

struct GradCheckCase {
  std::string name;
  double error = 0.0;
  double threshold = 0.0;
  bool passed() const { return error < threshold; }
};

inline constexpr double kSingleOpTolerance = 1e-6;
inline constexpr double kCompositeTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

// Finite-difference checks over every differentiable operator, the composite
// backbone / recurrent graphs and an end-to-end micro model, on seeded inputs.
std::vector<GradCheckCase> run_gradient_suite();

}  // namespace valdnet

#endif  // VALDNET_GRADSUITE_HPP_
