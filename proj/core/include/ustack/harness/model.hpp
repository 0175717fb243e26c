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
#include <optional>
#include <string>
#include <vector>

#include "ustack/fusion/fusion.hpp"
#include "ustack/gate/gate.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/laplace/head.hpp"
#include "ustack/numeric/mlp.hpp"
#include "ustack/scene/scene.hpp"

namespace ustack {

// Per-scene model inputs and supervision, already in matrix form.
struct SceneInputs {
  Matrix features_static;    // M_s x d_in
  Matrix features_dynamic;   // M_d x d_in
  Matrix reference_static;   // M_s x 2K_s observed vertices
  Matrix reference_dynamic;  // M_d x 10
  Matrix targets_static;     // M_s x 2K_s ground truth
  Matrix targets_dynamic;    // M_d x 10
  Matrix history;            // L x T ego status, column 0 = current
  TemporalQueryTensor temporal;  // N_tq x T x d_h, filled in temporal_vector mode
  Matrix future;             // T_fut x 2
};

// Temporal queries are a frozen random projection of per-slot history records
// (ego plus nearest agents), the stand-in for a tracker's temporal queries.
SceneInputs make_inputs(const SceneSample& sample, const PlannerConfig& cfg);

struct ForwardState {
  std::optional<MlpResult> query_static;
  std::optional<MlpResult> query_dynamic;
  std::optional<HeadResult> head_static;
  std::optional<HeadResult> head_dynamic;
  std::optional<EncodeResult> encode_static;
  std::optional<EncodeResult> encode_dynamic;
  std::optional<FuseResult> fuse_static;
  std::optional<FuseResult> fuse_dynamic;
  Matrix uncer_static;   // queries handed to the planner
  Matrix uncer_dynamic;
  std::optional<PoolResult> pool;
  std::optional<GateResult> gate;
  Matrix history_raw;    // L x T, or T x d_h (mean over temporal slots)
  Matrix history_in;     // history_raw after gating
  Matrix planner_input;  // 1 x P
  std::optional<MlpResult> planner;
  Matrix trajectory;     // T_fut x 2
};

struct LossBreakdown {
  double total = 0.0;
  double static_loss = 0.0;
  double dynamic_loss = 0.0;
  double plan_l1 = 0.0;
};

struct LossGrads {
  Matrix d_params_static;
  Matrix d_params_dynamic;
  Matrix d_trajectory;
};

struct ModuleParameterCounts {
  std::size_t query_encoders = 0;
  std::size_t heads = 0;
  std::size_t fusion_static = 0;
  std::size_t fusion_dynamic = 0;
  std::size_t gate = 0;
  std::size_t planner = 0;

  std::size_t total() const {
    return query_encoders + heads + fusion_static + fusion_dynamic + gate + planner;
  }
  std::size_t uncertainty_modules() const { return fusion_static + fusion_dynamic + gate; }
};

// Query encoders -> Laplace heads -> (optional) per-branch fusion -> (optional)
// gate over the history input -> planner MLP. Switched-off modules are not
// constructed, so the baseline carries no fusion or gate parameters.
class PlannerModel {
 public:
  explicit PlannerModel(PlannerConfig cfg);

  const PlannerConfig& config() const { return cfg_; }

  void init(std::uint64_t seed);

  ForwardState forward(const SceneInputs& in) const;
  Matrix plan(const SceneInputs& in) const { return forward(in).trajectory; }

  // Scene loss L_s + L_d + w_plan * l1(traj). Gradients are multiplied by `scale`.
  LossBreakdown loss(const ForwardState& st, const SceneInputs& in, const TrainConfig& tc,
                     LossGrads* grads, double scale = 1.0) const;
  // Accumulates parameter gradients. Consumes the caches in `st`.
  void backward(ForwardState& st, const LossGrads& grads);

  ParamList parameters();
  ParamList planner_parameters();
  ParamList non_planner_parameters();
  ModuleParameterCounts parameter_counts() const;
  std::size_t planner_input_size() const;

  LaplaceHead& head_static() { return head_static_; }
  LaplaceHead& head_dynamic() { return head_dynamic_; }
  const LaplaceHead& head_static() const { return head_static_; }
  const LaplaceHead& head_dynamic() const { return head_dynamic_; }
  std::optional<UncertaintyGate>& gate() { return gate_; }
  const std::optional<UncertaintyGate>& gate() const { return gate_; }
  Mlp& planner() { return planner_; }

 private:
  PlannerConfig cfg_;
  Mlp query_static_;
  Mlp query_dynamic_;
  LaplaceHead head_static_;
  LaplaceHead head_dynamic_;
  std::optional<UncertaintyFusion> fusion_static_;
  std::optional<UncertaintyFusion> fusion_dynamic_;
  std::optional<UncertaintyGate> gate_;
  Mlp planner_;
};

}  // namespace ustack
