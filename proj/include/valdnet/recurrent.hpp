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

#ifndef VALDNET_RECURRENT_HPP_
#define VALDNET_RECURRENT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "valdnet/tape.hpp"
#include "valdnet/weights.hpp"

namespace valdnet {

enum class CellKind { kLstm, kGru };

std::string_view cell_name(CellKind cell);
CellKind parse_cell(std::string_view name);

// Gate letters in storage order: LSTM f,i,o,c; GRU z,r,h.
std::string_view cell_gates(CellKind cell);

struct GateWeights {
  Var w;  // [hidden, input]
  Var u;  // [hidden, hidden]
  Var b;  // [hidden]
};

struct RecurrentWeights {
  CellKind cell = CellKind::kGru;
  std::size_t input = 0;
  std::size_t hidden = 0;
  std::vector<GateWeights> gates;  // cell_gates() order
};

struct RecurrentState {
  Var h;
  Var c;  // LSTM only
};

// <prefix>.<gate>.{W,U,b}
std::vector<ParamSpec> recurrent_params(CellKind cell, std::size_t input,
                                        std::size_t hidden,
                                        const std::string& prefix);
RecurrentWeights bind_recurrent(Bindings& w, CellKind cell,
                                const std::string& prefix);

RecurrentState zero_state(Tape& tape, const RecurrentWeights& w);

// f,i,o = sigmoid(W x + U h + b); c~ = tanh(...);
// c' = f∘c + i∘c~; h' = o∘tanh(c').
RecurrentState lstm_step(Tape& tape, Var x, const RecurrentState& state,
                         const RecurrentWeights& w);

// Reset-gated GRU:
// z = sigmoid(W_z x + U_z h + b_z); r = sigmoid(W_r x + U_r h + b_r);
// h' = (1-z)∘h + z∘tanh(W_h x + U_h (r∘h) + b_h).
RecurrentState gru_step(Tape& tape, Var x, const RecurrentState& state,
                        const RecurrentWeights& w);

// xs [T,input] -> [T,hidden], starting from the zero state.
Var run_sequence(Tape& tape, Var xs, const RecurrentWeights& w);

// xs [T,input] -> [T, 2*hidden]; row t = [fwd_t, bwd over reversed xs at T-1-t].
Var bidirectional(Tape& tape, Var xs, const RecurrentWeights& fwd,
                  const RecurrentWeights& bwd);

}  // namespace valdnet

#endif  // VALDNET_RECURRENT_HPP_
