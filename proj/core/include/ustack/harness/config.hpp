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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ustack/gate/gate.hpp"
#include "ustack/laplace/laplace.hpp"
#include "ustack/scene/scene.hpp"

namespace ustack {

enum class HistoryMode { kEgoMatrix, kTemporalVector };

struct PlannerConfig {
  std::size_t d_in = 64;
  std::size_t d_h = 64;
  std::vector<std::size_t> query_hidden{512, 512};
  std::vector<std::size_t> head_hidden{64};
  std::vector<std::size_t> fusion_hidden;
  std::vector<std::size_t> planner_hidden{128};
  std::size_t n_heads = 4;
  std::size_t static_vertices = kDefaultStaticVertexCount;
  std::size_t history_steps = 4;
  std::size_t future_steps = 6;
  std::size_t temporal_slots = 5;  // ego plus the nearest agents
  HistoryMode history_mode = HistoryMode::kEgoMatrix;
  bool use_static_uncer = true;
  bool use_dynamic_uncer = true;
  bool use_gate = true;
  bool residual_fusion = false;
  // Location inputs to the fusion encoders are multiplied by this (meters -> ~unit range).
  double fusion_position_scale = 0.05;
  // Head locations are predicted as offsets from the observed vertices.
  bool anchor_heads = true;
  // Fusion reads head outputs without sending gradients back into the heads.
  bool detach_heads = true;

  void validate() const;
  std::size_t ego_features() const { return 8; }
};

struct TrainConfig {
  std::size_t epochs_stage1 = 10;
  std::size_t epochs_stage2 = 10;
  double learning_rate = 3e-3;
  double momentum = 0.9;
  std::size_t batch_size = 4;
  double w_plan = 1.0;
  double clip_norm = 10.0;
  LossWeights static_weights = LossWeights::static_defaults();
  LossWeights dynamic_weights = LossWeights::dynamic_defaults();

  void validate() const;
};

struct DataConfig {
  std::size_t n_train = 512;
  std::size_t n_test = 128;
  std::size_t n_lanes = 3;
  std::size_t n_agents = 5;
  std::size_t duration_steps = 10;
  double dt = 0.5;
  Complexity complexity = Complexity::kComplex;
  double curved_fraction = 0.5;
  std::uint64_t encoder_key = SurrogateEncoderSpec{}.key;

  void validate() const;
};

struct EpdmsConfig {
  // Weights over (TTC, EP, HC, LK, EC).
  std::array<double, 5> weights{1.0, 1.0, 1.0, 1.0, 1.0};
  double ego_radius = 1.0;
  double lane_keeping_tolerance = 0.5;
  double ttc_horizon = 3.0;

  void validate() const;
};

struct RunConfig {
  PlannerConfig model;
  TrainConfig train;
  DataConfig data;
  NoiseModel noise{0.1, 0.005, 0.3, NoiseFamily::kLaplace};
  EpdmsConfig epdms;
  std::uint64_t seed = 0;

  void validate() const;
  SceneSpec scene_spec(std::uint64_t scene_seed_value) const;
  SurrogateEncoderSpec encoder_spec() const { return {model.d_in, data.encoder_key}; }
};

// INI-style text: [section] headers, key = value lines, '#' comments. Unknown
// sections or keys and malformed values throw ConfigError naming the line.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
// Canonical dump; parse_config(write_config(c)) reproduces c.
void write_config(std::ostream& out, const RunConfig& cfg);

}  // namespace ustack
