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
#include <vector>

#include "ustack/gate/gate.hpp"
#include "ustack/geometry/bev.hpp"
#include "ustack/numeric/matrix.hpp"

namespace ustack {

enum class Complexity { kSimple, kComplex };
enum class NoiseFamily { kLaplace, kGaussian };

struct SceneSpec {
  std::size_t n_lanes = 3;
  std::size_t n_agents = 5;
  std::size_t history_steps = 4;   // T, current step included
  std::size_t future_steps = 6;    // T_fut
  std::size_t duration_steps = 10;
  double dt = 0.5;
  Complexity complexity = Complexity::kComplex;
  // Probability that the road is a constant-curvature arc instead of straight.
  double curved_fraction = 0.5;
  std::size_t static_vertices = kDefaultStaticVertexCount;
  std::uint64_t seed = 0;

  void validate() const;
};

// Ground-truth per-vertex noise scale: b0 + b_dist * range + b_occl * occluded.
// A dynamic vertex is occluded when it lies on the far side of its agent's
// center as seen from the ego origin. Static vertices are never occluded.
struct NoiseModel {
  double b0 = 0.0;
  double b_dist = 0.0;
  double b_occl = 0.0;
  // Gaussian draws use sigma = b * sqrt(pi / 2) so E|noise| = b in both families.
  NoiseFamily family = NoiseFamily::kLaplace;

  void validate() const;
  double scale(double range, bool occluded) const { return b0 + b_dist * range + b_occl * (occluded ? 1.0 : 0.0); }
};

// Frozen random linear "image encoder" standing in for the camera backbone.
struct SurrogateEncoderSpec {
  std::size_t d_in = 64;
  std::uint64_t key = 0x5EEDF00DCAFEULL;
};

struct AgentState {
  Box7 box;
  double vx = 0.0;
  double vy = 0.0;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

using AxisScales = std::array<double, 2>;

// Everything is expressed in the ego frame at the current step: ego at the
// origin, heading along +x.
struct SceneSample {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  double dt = 0.5;
  std::size_t history_steps = 4;
  std::size_t future_steps = 6;
  double curvature = 0.0;
  std::size_t ego_lane = 0;
  Complexity complexity = Complexity::kComplex;

  std::vector<Polyline> map_elements;            // lane centerlines
  std::vector<std::vector<AgentState>> agents;   // [step][agent], step T-1 is current
  EgoStatusMatrix ego_history;                   // 8 x T, column 0 = current
  Matrix ego_future;                             // T_fut x 2

  // Filled by observe().
  bool observed = false;
  std::size_t static_vertices = kDefaultStaticVertexCount;
  std::vector<VertexSet> observed_static;
  std::vector<VertexSet> observed_dynamic;
  std::vector<std::vector<AxisScales>> true_scales_static;
  std::vector<std::vector<AxisScales>> true_scales_dynamic;
  std::vector<std::vector<std::uint8_t>> occluded_dynamic;
  Matrix input_features_static;   // M_s x d_in
  Matrix input_features_dynamic;  // M_d x d_in

  std::size_t current_step() const { return history_steps - 1; }
  std::size_t agent_count() const { return agents.empty() ? 0 : agents.front().size(); }
  std::vector<VertexSet> target_static() const;
  std::vector<VertexSet> target_dynamic() const;
  // Boxes at future step f (1-based, f = 1..T_fut).
  std::vector<Box7> future_boxes(std::size_t f) const;

  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

// Noise-free world. Throws GenerationError when the complexity constraint
// cannot be met within the retry budget.
SceneSample generate_scene(const SceneSpec& spec);

// Adds per-vertex noise, records the scales used, and computes the surrogate
// encoder features. Pure in (sample, noise, seed, encoder).
SceneSample observe(const SceneSample& sample, const NoiseModel& noise, std::uint64_t seed,
                    const SurrogateEncoderSpec& encoder = {});

// Per-scene seed for scene `index` of a dataset generated with `seed`.
std::uint64_t scene_seed(std::uint64_t seed, std::size_t index);

// Constant-velocity extrapolation of the current ego velocity.
Matrix constant_velocity_baseline(const SceneSample& sample);

// Count of agents whose center is within `radius` of the ego at the current step.
std::size_t agents_within(const SceneSample& sample, double radius);

}  // namespace ustack
