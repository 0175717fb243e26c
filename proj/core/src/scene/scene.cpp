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

#include "ustack/scene/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ustack/errors.hpp"
#include "ustack/laplace/laplace.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kHeadwayBrake = 10.0;    // m
constexpr double kBrakeDecel = 3.0;       // m/s^2
constexpr double kAccel = 1.0;            // m/s^2
constexpr double kEgoLength = 4.6;
constexpr double kMapBehind = 20.0;       // lane polylines span [-20, 60] m of arc
constexpr double kMapAhead = 60.0;
constexpr double kMapSpacing = 2.0;
constexpr double kNearRadius = 20.0;
constexpr std::size_t kPreRoll = 2;       // extra steps so v and a exist at the oldest history step
constexpr int kMaxRetries = 200;
constexpr double kFeaturePositionScale = 1.0 / 20.0;
constexpr double kFeatureRangeScale = 1.0 / 50.0;

// Constant-curvature road; s is arc length along the ego lane, d the lateral
// offset (left positive). The ego lane passes through the origin heading +x at s = 0.
struct Road {
  double kappa = 0.0;

  double heading(double s) const { return kappa * s; }

  Point2 at(double s, double d) const {
    if (std::abs(kappa) < 1e-12) return {s, d};
    const double psi = kappa * s;
    const double half = std::sin(0.5 * psi);
    const double bx = std::sin(psi) / kappa;
    const double by = 2.0 * half * half / kappa;
    return {bx - d * std::sin(psi), by + d * std::cos(psi)};
  }
};

struct Actor {
  std::size_t lane = 0;
  double s = 0.0;
  double v = 0.0;
  double v_des = 0.0;
  double length = 4.5;
  double width = 1.9;
};

void simulate_step(std::vector<Actor>& actors, double dt) {
  std::vector<double> next_v(actors.size());
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const Actor& a = actors[i];
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < actors.size(); ++j) {
      const Actor& b = actors[j];
      if (j == i || b.lane != a.lane || b.s <= a.s) continue;
      gap = std::min(gap, b.s - a.s - 0.5 * (a.length + b.length));
    }
    next_v[i] = gap < kHeadwayBrake ? std::max(0.0, a.v - kBrakeDecel * dt)
                                    : std::min(a.v_des, a.v + kAccel * dt);
  }
  for (std::size_t i = 0; i < actors.size(); ++i) {
    actors[i].v = next_v[i];
    actors[i].s += next_v[i] * dt;
  }
}

bool separated(const std::vector<Actor>& placed, const Actor& cand) {
  for (const Actor& p : placed) {
    if (p.lane != cand.lane) continue;
    if (std::abs(p.s - cand.s) < 0.5 * (p.length + cand.length) + 4.0) return false;
  }
  return true;
}

}  // namespace

void SceneSpec::validate() const {
  if (n_lanes == 0) throw ValidationError("SceneSpec.n_lanes must be >= 1");
  if (!(dt > 0.0)) throw ValidationError("SceneSpec.dt must be positive");
  if (history_steps == 0 || future_steps == 0) {
    throw ValidationError("SceneSpec: history_steps and future_steps must be >= 1");
  }
  if (duration_steps < history_steps + future_steps) {
    throw ValidationError("SceneSpec.duration_steps must cover history + future steps");
  }
  if (!(curved_fraction >= 0.0 && curved_fraction <= 1.0)) {
    throw ValidationError("SceneSpec.curved_fraction must be in [0, 1]");
  }
  if (static_vertices < 2) throw ValidationError("SceneSpec.static_vertices must be >= 2");
}

void NoiseModel::validate() const {
  if (!(b0 >= 0.0) || !(b_dist >= 0.0) || !(b_occl >= 0.0)) {
    throw ValidationError("NoiseModel: b0, b_dist, b_occl must be >= 0");
  }
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t index) {
  return derive_key(seed, {0x5CE7E, index});
}

SceneSample generate_scene(const SceneSpec& spec) {
  spec.validate();
  if (spec.complexity == Complexity::kComplex && spec.n_agents < 3) {
    throw GenerationError("generate_scene: complex scenes need at least 3 agents, got " +
                          std::to_string(spec.n_agents));
  }
  const double dt = spec.dt;
  const std::size_t T = spec.history_steps;
  const std::size_t sim_steps = spec.duration_steps + kPreRoll;
  const std::size_t current = kPreRoll + T - 1;

  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    KeyedRng rng(spec.seed, {static_cast<std::uint64_t>(attempt)});

    Road road;
    if (rng.uniform() < spec.curved_fraction) {
      const double mag = rng.uniform(0.002, 0.012);
      road.kappa = rng.uniform() < 0.5 ? mag : -mag;
    }
    const std::size_t ego_lane = rng.below(spec.n_lanes);
    auto lane_offset = [&](std::size_t lane) {
      return kLaneWidth * (static_cast<double>(lane) - static_cast<double>(ego_lane));
    };

    Actor ego;
    ego.lane = ego_lane;
    ego.v_des = rng.uniform(6.0, 14.0);
    ego.v = ego.v_des;
    ego.length = kEgoLength;
    std::vector<Actor> actors{ego};

    const std::size_t n_near = spec.complexity == Complexity::kComplex
                                   ? std::min<std::size_t>(spec.n_agents, 3 + rng.below(2))
                                   : std::min<std::size_t>(spec.n_agents, rng.below(2));
    bool lead_placed = false;
    bool failed = false;
    for (std::size_t a = 0; a < spec.n_agents && !failed; ++a) {
      const bool near = a < n_near;
      bool ok = false;
      for (int tries = 0; tries < 50 && !ok; ++tries) {
        Actor cand;
        cand.length = rng.uniform(3.8, 5.2);
        cand.width = rng.uniform(1.7, 2.1);
        if (near && !lead_placed && spec.complexity == Complexity::kComplex && rng.uniform() < 0.6) {
          // Slower lead vehicle shortly ahead of the ego in its own lane.
          cand.lane = ego_lane;
          cand.s = rng.uniform(12.0, 22.0);
          cand.v_des = std::max(1.0, ego.v_des - rng.uniform(2.0, 6.0));
        } else if (near) {
          cand.lane = rng.below(spec.n_lanes);
          cand.s = rng.uniform(-14.0, 14.0);
          cand.v_des = std::max(1.0, ego.v_des + rng.uniform(-1.5, 1.5));
        } else {
          cand.lane = rng.below(spec.n_lanes);
          cand.s = rng.uniform() < 0.5 ? rng.uniform(35.0, 80.0) : rng.uniform(-70.0, -35.0);
          cand.v_des = rng.uniform(4.0, 14.0);
        }
        cand.v = cand.v_des;
        if (separated(actors, cand)) {
          if (cand.lane == ego_lane && near && cand.s > 0.0) lead_placed = true;
          actors.push_back(cand);
          ok = true;
        }
      }
      failed = !ok;
    }
    if (failed) continue;

    std::vector<std::vector<Actor>> history{actors};
    for (std::size_t i = 1; i < sim_steps; ++i) {
      simulate_step(actors, dt);
      history.push_back(actors);
    }

    const double s_shift = history[current][0].s;
    auto world = [&](const Actor& a) {
      return road.at(a.s - s_shift, lane_offset(a.lane));
    };

    SceneSample out;
    out.seed = spec.seed;
    out.dt = dt;
    out.history_steps = T;
    out.future_steps = spec.future_steps;
    out.curvature = road.kappa;
    out.ego_lane = ego_lane;
    out.complexity = spec.complexity;
    out.static_vertices = spec.static_vertices;

    const std::size_t n_actors = actors.size();
    for (std::size_t step = 0; step < spec.duration_steps; ++step) {
      const auto& snap = history[kPreRoll + step];
      std::vector<AgentState> states;
      for (std::size_t a = 1; a < n_actors; ++a) {
        const Actor& act = snap[a];
        const Point2 p = world(act);
        const double psi = road.heading(act.s - s_shift);
        AgentState st;
        st.box = Box7{p.x, p.y, 0.0, act.width, act.length, 1.6, normalize_heading(psi)};
        st.vx = act.v * std::cos(psi);
        st.vy = act.v * std::sin(psi);
        states.push_back(st);
      }
      out.agents.push_back(std::move(states));
    }

    std::size_t near_now = 0;
    for (const AgentState& st : out.agents[T - 1]) {
      if (std::hypot(st.box.x, st.box.y) < kNearRadius) ++near_now;
    }
    if (spec.complexity == Complexity::kComplex && near_now < 3) continue;
    if (spec.complexity == Complexity::kSimple && near_now > 1) continue;

    for (std::size_t lane = 0; lane < spec.n_lanes; ++lane) {
      Polyline pl;
      const double d = lane_offset(lane);
      for (double s = -kMapBehind; s <= kMapAhead + 1e-9; s += kMapSpacing) pl.points.push_back(road.at(s, d));
      out.map_elements.push_back(std::move(pl));
    }

    // Ego velocity/acceleration by finite differences of positions.
    auto ego_pos = [&](std::size_t sim_index) { return world(history[sim_index][0]); };
    auto ego_vel = [&](std::size_t sim_index) {
      const Point2 a = ego_pos(sim_index - 1);
      const Point2 b = ego_pos(sim_index);
      return Point2{(b.x - a.x) / dt, (b.y - a.y) / dt};
    };
    out.ego_history.feature_names = default_ego_feature_names();
    out.ego_history.values = Matrix(out.ego_history.feature_names.size(), T);
    const Point2 v_now = ego_vel(current);
    const double speed_now = std::hypot(v_now.x, v_now.y);
    std::size_t cmd = 1;
    if (speed_now < 1.0) cmd = 3;
    else if (road.kappa > 0.0) cmd = 0;
    else if (road.kappa < 0.0) cmd = 2;
    for (std::size_t j = 0; j < T; ++j) {
      const std::size_t idx = current - j;
      const Point2 v = ego_vel(idx);
      const Point2 v_prev = ego_vel(idx - 1);
      Matrix& m = out.ego_history.values;
      m(cmd, j) = 1.0;
      m(4, j) = v.x;
      m(5, j) = v.y;
      m(6, j) = (v.x - v_prev.x) / dt;
      m(7, j) = (v.y - v_prev.y) / dt;
    }

    out.ego_future = Matrix(spec.future_steps, 2);
    for (std::size_t f = 1; f <= spec.future_steps; ++f) {
      const Point2 p = ego_pos(current + f);
      out.ego_future(f - 1, 0) = p.x;
      out.ego_future(f - 1, 1) = p.y;
    }
    return out;
  }
  throw GenerationError("generate_scene: could not satisfy placement constraints for seed " +
                        std::to_string(spec.seed) + " after " + std::to_string(kMaxRetries) +
                        " attempts");
}

std::vector<VertexSet> SceneSample::target_static() const {
  std::vector<VertexSet> out;
  out.reserve(map_elements.size());
  for (const Polyline& pl : map_elements) out.push_back(resample_polyline(pl, static_vertices));
  return out;
}

std::vector<VertexSet> SceneSample::target_dynamic() const {
  std::vector<VertexSet> out;
  if (agents.empty()) return out;
  for (const AgentState& a : agents[current_step()]) out.push_back(box_to_vertices(a.box));
  return out;
}

std::vector<Box7> SceneSample::future_boxes(std::size_t f) const {
  std::vector<Box7> out;
  const std::size_t step = current_step() + f;
  if (step >= agents.size()) throw ValidationError("future_boxes: step beyond scene duration");
  for (const AgentState& a : agents[step]) out.push_back(a.box);
  return out;
}

namespace {

double draw_noise(KeyedRng rng, double b, NoiseFamily family) {
  if (b == 0.0) return 0.0;
  if (family == NoiseFamily::kGaussian) return b * std::sqrt(std::numbers::pi / 2.0) * rng.normal();
  return laplace_sample(0.0, b, rng.centered_open());
}

Matrix surrogate_map(std::size_t d_in, std::size_t raw_dim, std::uint64_t key, std::uint64_t branch) {
  KeyedRng rng(key, {branch, d_in, raw_dim});
  Matrix m(raw_dim, d_in);
  const double scale = 1.0 / std::sqrt(static_cast<double>(raw_dim));
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

// Rows: [x0, y0, x1, y1, ... (scaled), mean range (scaled), occlusion flags...]
Matrix encode_elements(const std::vector<VertexSet>& observed,
                       const std::vector<std::vector<std::uint8_t>>& occluded, std::size_t k,
                       const SurrogateEncoderSpec& enc, std::uint64_t branch) {
  const std::size_t raw_dim = 3 * k + 1;
  Matrix raw(observed.size(), raw_dim);
  for (std::size_t e = 0; e < observed.size(); ++e) {
    auto r = raw.row(e);
    double range = 0.0;
    for (std::size_t v = 0; v < k; ++v) {
      const Point2& p = observed[e].points[v];
      r[2 * v] = p.x * kFeaturePositionScale;
      r[2 * v + 1] = p.y * kFeaturePositionScale;
      range += std::hypot(p.x, p.y);
    }
    r[2 * k] = range / static_cast<double>(k) * kFeatureRangeScale;
    for (std::size_t v = 0; v < k; ++v) r[2 * k + 1 + v] = occluded.empty() ? 0.0 : occluded[e][v];
  }
  if (observed.empty()) return Matrix(0, enc.d_in);
  return matmul(raw, surrogate_map(enc.d_in, raw_dim, enc.key, branch));
}

}  // namespace

SceneSample observe(const SceneSample& sample, const NoiseModel& noise, std::uint64_t seed,
                    const SurrogateEncoderSpec& encoder) {
  noise.validate();
  if (encoder.d_in == 0) throw ValidationError("SurrogateEncoderSpec.d_in must be positive");
  SceneSample out = sample;
  out.observed = true;
  out.observed_static.clear();
  out.observed_dynamic.clear();
  out.true_scales_static.clear();
  out.true_scales_dynamic.clear();
  out.occluded_dynamic.clear();

  const auto statics = sample.target_static();
  for (std::size_t e = 0; e < statics.size(); ++e) {
    VertexSet obs = statics[e];
    std::vector<AxisScales> scales;
    for (std::size_t v = 0; v < obs.points.size(); ++v) {
      const Point2 p = obs.points[v];
      const double b = noise.scale(std::hypot(p.x, p.y), false);
      obs.points[v].x += draw_noise(KeyedRng(seed, {sample.seed, 0, e, v, 0}), b, noise.family);
      obs.points[v].y += draw_noise(KeyedRng(seed, {sample.seed, 0, e, v, 1}), b, noise.family);
      scales.push_back({b, b});
    }
    out.observed_static.push_back(std::move(obs));
    out.true_scales_static.push_back(std::move(scales));
  }

  const auto dynamics = sample.target_dynamic();
  for (std::size_t e = 0; e < dynamics.size(); ++e) {
    VertexSet obs = dynamics[e];
    const Point2 c = obs.points.back();
    std::vector<AxisScales> scales;
    std::vector<std::uint8_t> occ;
    for (std::size_t v = 0; v < obs.points.size(); ++v) {
      const Point2 p = obs.points[v];
      // Far side of the agent: beyond its center along the ego line of sight.
      const bool occluded = (p.x - c.x) * c.x + (p.y - c.y) * c.y > 1e-9;
      const double b = noise.scale(std::hypot(p.x, p.y), occluded);
      obs.points[v].x += draw_noise(KeyedRng(seed, {sample.seed, 1, e, v, 0}), b, noise.family);
      obs.points[v].y += draw_noise(KeyedRng(seed, {sample.seed, 1, e, v, 1}), b, noise.family);
      scales.push_back({b, b});
      occ.push_back(occluded ? 1 : 0);
    }
    out.observed_dynamic.push_back(std::move(obs));
    out.true_scales_dynamic.push_back(std::move(scales));
    out.occluded_dynamic.push_back(std::move(occ));
  }

  out.input_features_static =
      encode_elements(out.observed_static, {}, sample.static_vertices, encoder, 0);
  out.input_features_dynamic =
      encode_elements(out.observed_dynamic, out.occluded_dynamic, kDynamicVertexCount, encoder, 1);
  return out;
}

Matrix constant_velocity_baseline(const SceneSample& sample) {
  const double vx = sample.ego_history.values(4, 0);
  const double vy = sample.ego_history.values(5, 0);
  Matrix out(sample.future_steps, 2);
  for (std::size_t f = 1; f <= sample.future_steps; ++f) {
    const double t = static_cast<double>(f) * sample.dt;
    out(f - 1, 0) = vx * t;
    out(f - 1, 1) = vy * t;
  }
  return out;
}

std::size_t agents_within(const SceneSample& sample, double radius) {
  std::size_t n = 0;
  if (sample.agents.empty()) return 0;
  for (const AgentState& a : sample.agents[sample.current_step()]) {
    if (std::hypot(a.box.x, a.box.y) < radius) ++n;
  }
  return n;
}

}  // namespace ustack
