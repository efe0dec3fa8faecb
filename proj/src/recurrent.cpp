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

#include "valdnet/recurrent.hpp"

#include "valdnet/errors.hpp"

namespace valdnet {

std::string_view cell_name(CellKind cell) {
  return cell == CellKind::kLstm ? "lstm" : "gru";
}

CellKind parse_cell(std::string_view name) {
  if (name == "lstm") return CellKind::kLstm;
  if (name == "gru") return CellKind::kGru;
  throw ContractError("unknown recurrent cell: " + std::string(name));
}

std::string_view cell_gates(CellKind cell) {
  return cell == CellKind::kLstm ? "fioc" : "zrh";
}

std::vector<ParamSpec> recurrent_params(CellKind cell, std::size_t input,
                                        std::size_t hidden,
                                        const std::string& prefix) {
  if (input == 0 || hidden == 0) {
    throw ContractError("recurrent input and hidden sizes must be positive");
  }
  std::vector<ParamSpec> specs;
  for (char g : cell_gates(cell)) {
    const std::string base = prefix + "." + g + ".";
    specs.push_back({base + "W", {hidden, input}, Init::kFanInUniform, input});
    specs.push_back({base + "U", {hidden, hidden}, Init::kFanInUniform, hidden});
    specs.push_back({base + "b", {hidden}, Init::kZeros, 1});
  }
  return specs;
}

RecurrentWeights bind_recurrent(Bindings& w, CellKind cell,
                                const std::string& prefix) {
  RecurrentWeights rw;
  rw.cell = cell;
  Tape& t = w.tape();
  for (char g : cell_gates(cell)) {
    const std::string base = prefix + "." + g + ".";
    GateWeights gate{w(base + "W"), w(base + "U"), w(base + "b")};
    const Tensor& wt = t.value(gate.w);
    const Tensor& ut = t.value(gate.u);
    const Tensor& bt = t.value(gate.b);
    if (wt.rank() != 2 || ut.rank() != 2 || bt.rank() != 1 ||
        ut.dim(0) != wt.dim(0) || ut.dim(1) != wt.dim(0) ||
        bt.dim(0) != wt.dim(0)) {
      throw DimensionError("inconsistent recurrent weights under " + base);
    }
    if (rw.gates.empty()) {
      rw.input = wt.dim(1);
      rw.hidden = wt.dim(0);
    } else if (wt.dim(1) != rw.input || wt.dim(0) != rw.hidden) {
      throw DimensionError("recurrent gates disagree on sizes under " + prefix);
    }
    rw.gates.push_back(gate);
  }
  return rw;
}

RecurrentState zero_state(Tape& tape, const RecurrentWeights& w) {
  RecurrentState s;
  s.h = tape.constant(Tensor({w.hidden}));
  if (w.cell == CellKind::kLstm) s.c = tape.constant(Tensor({w.hidden}));
  return s;
}

namespace {

void check_step(const Tape& tape, Var x, const RecurrentState& s,
                const RecurrentWeights& w, CellKind expected) {
  if (w.cell != expected) throw ContractError("cell kind does not match weights");
  const Tensor& xt = tape.value(x);
  if (xt.rank() != 1 || xt.dim(0) != w.input) {
    throw DimensionError("recurrent input " + shape_string(xt.shape()) +
                         " does not match input size " + std::to_string(w.input));
  }
  const Tensor& ht = tape.value(s.h);
  if (ht.rank() != 1 || ht.dim(0) != w.hidden) {
    throw DimensionError("recurrent state does not match hidden size");
  }
}

Var preactivation(Tape& t, const GateWeights& g, Var x, Var h) {
  return t.add(t.add(t.matvec(g.w, x), t.matvec(g.u, h)), g.b);
}

}  // namespace

RecurrentState lstm_step(Tape& t, Var x, const RecurrentState& state,
                         const RecurrentWeights& w) {
  check_step(t, x, state, w, CellKind::kLstm);
  const Var f = t.sigmoid(preactivation(t, w.gates[0], x, state.h));
  const Var i = t.sigmoid(preactivation(t, w.gates[1], x, state.h));
  const Var o = t.sigmoid(preactivation(t, w.gates[2], x, state.h));
  const Var cand = t.tanh(preactivation(t, w.gates[3], x, state.h));
  RecurrentState next;
  next.c = t.add(t.mul(f, state.c), t.mul(i, cand));
  next.h = t.mul(o, t.tanh(next.c));
  return next;
}

RecurrentState gru_step(Tape& t, Var x, const RecurrentState& state,
                        const RecurrentWeights& w) {
  check_step(t, x, state, w, CellKind::kGru);
  const Var z = t.sigmoid(preactivation(t, w.gates[0], x, state.h));
  const Var r = t.sigmoid(preactivation(t, w.gates[1], x, state.h));
  const GateWeights& gh = w.gates[2];
  const Var cand = t.tanh(t.add(
      t.add(t.matvec(gh.w, x), t.matvec(gh.u, t.mul(r, state.h))), gh.b));
  RecurrentState next;
  next.h = t.add(t.mul(t.affine(z, -1.0, 1.0), state.h), t.mul(z, cand));
  return next;
}

namespace {

std::vector<Var> run_states(Tape& t, Var xs, const RecurrentWeights& w,
                            bool reverse) {
  const Tensor& x = t.value(xs);
  if (x.rank() != 2) throw DimensionError("sequence input must be [T,input]");
  const std::size_t steps = x.dim(0);
  std::vector<Var> hs(steps);
  RecurrentState s = zero_state(t, w);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t idx = reverse ? steps - 1 - k : k;
    const Var xt = t.row(xs, idx);
    s = w.cell == CellKind::kLstm ? lstm_step(t, xt, s, w) : gru_step(t, xt, s, w);
    hs[k] = s.h;
  }
  return hs;
}

}  // namespace

Var run_sequence(Tape& t, Var xs, const RecurrentWeights& w) {
  return t.stack(run_states(t, xs, w, false));
}

Var bidirectional(Tape& t, Var xs, const RecurrentWeights& fwd,
                  const RecurrentWeights& bwd) {
  const std::vector<Var> ahead = run_states(t, xs, fwd, false);
  const std::vector<Var> behind = run_states(t, xs, bwd, true);
  const std::size_t steps = ahead.size();
  std::vector<Var> rows(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const Var parts[2] = {ahead[k], behind[steps - 1 - k]};
    rows[k] = t.concat(parts);
  }
  return t.stack(rows);
}

}  // namespace valdnet
