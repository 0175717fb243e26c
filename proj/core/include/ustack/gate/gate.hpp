/*
 * Copyright 2026 The ustack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ustack/numeric/matrix.hpp"
#include "ustack/numeric/mlp.hpp"

namespace ustack {

enum class GateMode { kTemporal, kEgo };

// Pooled summary of the uncertainty-aware queries (1 x d_h).
struct GlobalContext {
  Matrix c;
  std::vector<double> weights;  // softmax pooling weights, one per query row
};

// N_tq x T x d_h, stored with d fastest.
struct TemporalQueryTensor {
  std::size_t n_queries = 0;
  std::size_t steps = 0;
  std::size_t d_h = 0;
  std::vector<double> values;

  TemporalQueryTensor() = default;
  TemporalQueryTensor(std::size_t n, std::size_t t, std::size_t d)
      : n_queries(n), steps(t), d_h(d), values(n * t * d, 0.0) {}

  double& at(std::size_t n, std::size_t t, std::size_t d) { return values[(n * steps + t) * d_h + d]; }
  double at(std::size_t n, std::size_t t, std::size_t d) const {
    return values[(n * steps + t) * d_h + d];
  }
  friend bool operator==(const TemporalQueryTensor&, const TemporalQueryTensor&) = default;
};

// L x T ego record; column 0 is the current step, column t is t steps back.
struct EgoStatusMatrix {
  Matrix values;
  std::vector<std::string> feature_names;

  friend bool operator==(const EgoStatusMatrix&, const EgoStatusMatrix&) = default;
};

// {cmd_left, cmd_straight, cmd_right, cmd_na, vx, vy, ax, ay}
const std::vector<std::string>& default_ego_feature_names();

// Temporal gates are 1 x T; ego gates are L x T. Every value lies in (0, 1).
struct GateSignal {
  GateMode mode = GateMode::kTemporal;
  Matrix values;
};

struct GateConfig {
  std::size_t d_h = 64;
  std::size_t steps = 4;          // T
  std::size_t ego_features = 8;   // L
  GateMode mode = GateMode::kEgo;

  void validate() const;
  std::size_t gate_width() const { return mode == GateMode::kTemporal ? steps : ego_features * steps; }
};

struct PoolResult {
  GlobalContext context;
  Matrix queries;
};

struct GateResult {
  GateSignal signal;
  Matrix context;
};

// Attention pooling (f_attn: d_h -> 1) followed by a sigmoid projection
// (d_h -> T, or d_h -> L*T in ego mode). All layers start at zero, so a fresh
// gate pools uniformly and emits exactly 0.5 everywhere.
class UncertaintyGate {
 public:
  UncertaintyGate() = default;
  UncertaintyGate(std::string name, GateConfig cfg);

  const GateConfig& config() const { return cfg_; }

  PoolResult pool_context(const Matrix& queries) const;
  Matrix pool_backward(const PoolResult& r, const Matrix& d_context);

  GateResult gate(const Matrix& context) const;
  // `d_gate` has the shape of the emitted signal. Returns d(context).
  Matrix gate_backward(const GateResult& r, const Matrix& d_gate);

  void init(std::uint64_t seed);
  void collect(ParamList& out);
  std::size_t parameter_count() const;

  Linear& score() { return score_; }
  Linear& projection() { return projection_; }

 private:
  GateConfig cfg_;
  Linear score_;
  Linear projection_;
};

GlobalContext pool_context(const UncertaintyGate& gate, const Matrix& queries);
GateSignal temporal_gate(const UncertaintyGate& gate, const GlobalContext& c);
GateSignal ego_gate(const UncertaintyGate& gate, const GlobalContext& c);

TemporalQueryTensor apply_temporal_gate(const GateSignal& g, const TemporalQueryTensor& q);
EgoStatusMatrix apply_ego_gate(const GateSignal& g, const EgoStatusMatrix& s);

// Gradients of the gated products w.r.t. the gate values and the gated input.
struct TemporalGateGrads {
  Matrix d_gate;  // 1 x T
  TemporalQueryTensor d_input;
};
TemporalGateGrads apply_temporal_gate_backward(const GateSignal& g, const TemporalQueryTensor& q,
                                               const TemporalQueryTensor& d_out);

struct EgoGateGrads {
  Matrix d_gate;  // L x T
  Matrix d_input;
};
EgoGateGrads apply_ego_gate_backward(const GateSignal& g, const EgoStatusMatrix& s,
                                     const Matrix& d_out);

// Heatmap CSV: header "feature,t,t-1,...", one row per feature (or a single
// "temporal" row).
void write_gate_csv(std::ostream& out, const GateSignal& g, const std::vector<std::string>& labels);

}  // namespace ustack
