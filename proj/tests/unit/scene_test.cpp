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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ustack/errors.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/pipeline.hpp"
#include "ustack/scene/dataset.hpp"
#include "ustack/scene/scene.hpp"

using namespace ustack;

namespace {

SceneSpec spec_for(std::uint64_t seed, Complexity c = Complexity::kComplex) {
  SceneSpec s;
  s.seed = seed;
  s.complexity = c;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("empty straight road: constant velocity extrapolation is exact") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SceneSpec s = spec_for(seed, Complexity::kSimple);
    s.n_agents = 0;
    s.curved_fraction = 0.0;
    const SceneSample sample = generate_scene(s);
    CHECK(sample.agent_count() == 0);
    CHECK(sample.curvature == 0.0);
    const HorizonValues l2 = l2_displacement(constant_velocity_baseline(sample), sample.ego_future);
    CHECK(l2.avg < 1e-9);
  }
}

TEST_CASE("generation is deterministic") {
  const SceneSample a = generate_scene(spec_for(11));
  const SceneSample b = generate_scene(spec_for(11));
  CHECK(serialize_scene(a) == serialize_scene(b));
  const NoiseModel noise{0.1, 0.005, 0.3, NoiseFamily::kLaplace};
  CHECK(serialize_scene(observe(a, noise, 5)) == serialize_scene(observe(b, noise, 5)));
  CHECK(serialize_scene(observe(a, noise, 5)) != serialize_scene(observe(a, noise, 6)));
}

TEST_CASE("complex scenes have at least 3 agents within 20 m; simple at most 1") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CHECK(agents_within(generate_scene(spec_for(seed)), 20.0) >= 3);
    CHECK(agents_within(generate_scene(spec_for(seed, Complexity::kSimple)), 20.0) <= 1);
  }
  SceneSpec few = spec_for(1);
  few.n_agents = 2;
  CHECK_THROWS_AS(generate_scene(few), GenerationError);
}

TEST_CASE("scene spec validation") {
  SceneSpec s;
  s.dt = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = SceneSpec{};
  s.duration_steps = s.history_steps + s.future_steps - 1;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK_THROWS_AS(NoiseModel({-0.1, 0.0, 0.0}).validate(), ValidationError);
}

TEST_CASE("zero noise observes ground truth exactly") {
  const SceneSample gt = generate_scene(spec_for(3));
  const SceneSample obs = observe(gt, {0.0, 0.0, 0.0}, 9);
  CHECK(obs.observed_static == gt.target_static());
  CHECK(obs.observed_dynamic == gt.target_dynamic());
  for (const auto& e : obs.true_scales_static)
    for (const AxisScales& s : e) CHECK((s[0] == 0.0 && s[1] == 0.0));
  for (const auto& e : obs.true_scales_dynamic)
    for (const AxisScales& s : e) CHECK((s[0] == 0.0 && s[1] == 0.0));
}

TEST_CASE("observation shapes follow the ground truth") {
  const SceneSample obs = observe(generate_scene(spec_for(4)), {0.1, 0.005, 0.3}, 1);
  CHECK(obs.observed_static.size() == obs.map_elements.size());
  CHECK(obs.observed_dynamic.size() == obs.agent_count());
  for (const VertexSet& v : obs.observed_static) CHECK(v.points.size() == obs.static_vertices);
  for (const VertexSet& v : obs.observed_dynamic) CHECK(v.points.size() == kDynamicVertexCount);
  CHECK(obs.input_features_static.rows() == obs.map_elements.size());
  CHECK(obs.input_features_dynamic.rows() == obs.agent_count());
  CHECK(obs.ego_history.values.rows() == 8);
  CHECK(obs.ego_history.values.cols() == obs.history_steps);
  CHECK(obs.ego_future.rows() == obs.future_steps);
}

TEST_CASE("injected noise is zero-median and uncorrelated across axes") {
  const NoiseModel noise{0.3, 0.0, 0.0, NoiseFamily::kLaplace};
  std::vector<double> dx, dy;
  for (std::uint64_t i = 0; dx.size() < 100000; ++i) {
    const SceneSample gt = generate_scene(spec_for(scene_seed(77, i)));
    const SceneSample obs = observe(gt, noise, 77);
    const auto ts = gt.target_static();
    const auto td = gt.target_dynamic();
    for (std::size_t e = 0; e < ts.size(); ++e)
      for (std::size_t v = 0; v < ts[e].points.size(); ++v) {
        dx.push_back(obs.observed_static[e].points[v].x - ts[e].points[v].x);
        dy.push_back(obs.observed_static[e].points[v].y - ts[e].points[v].y);
      }
    for (std::size_t e = 0; e < td.size(); ++e)
      for (std::size_t v = 0; v < td[e].points.size(); ++v) {
        dx.push_back(obs.observed_dynamic[e].points[v].x - td[e].points[v].x);
        dy.push_back(obs.observed_dynamic[e].points[v].y - td[e].points[v].y);
      }
  }
  CHECK(std::abs(median(dx)) <= 0.01);
  CHECK(std::abs(median(dy)) <= 0.01);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    mx += dx[i];
    my += dy[i];
  }
  mx /= dx.size();
  my /= dy.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    sxy += (dx[i] - mx) * (dy[i] - my);
    sxx += (dx[i] - mx) * (dx[i] - mx);
    syy += (dy[i] - my) * (dy[i] - my);
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) <= 0.02);
}

TEST_CASE("occluded vertices carry larger true scales") {
  const NoiseModel noise{0.1, 0.005, 0.3, NoiseFamily::kLaplace};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const SceneSample obs = observe(generate_scene(spec_for(seed)), noise, seed);
    double occ = 0, vis = 0;
    std::size_t n_occ = 0, n_vis = 0;
    for (std::size_t e = 0; e < obs.true_scales_dynamic.size(); ++e)
      for (std::size_t v = 0; v < kDynamicVertexCount; ++v) {
        const double b = obs.true_scales_dynamic[e][v][0];
        if (obs.occluded_dynamic[e][v]) {
          occ += b;
          ++n_occ;
        } else {
          vis += b;
          ++n_vis;
        }
      }
    REQUIRE(n_occ > 0);
    REQUIRE(n_vis > 0);
    CHECK(occ / n_occ > vis / n_vis);
  }
}

TEST_CASE("gaussian family matches the mean absolute deviation") {
  const NoiseModel noise{0.4, 0.0, 0.0, NoiseFamily::kGaussian};
  double sum = 0;
  std::size_t n = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const SceneSample gt = generate_scene(spec_for(scene_seed(5, i)));
    const SceneSample obs = observe(gt, noise, 5);
    const auto ts = gt.target_static();
    for (std::size_t e = 0; e < ts.size(); ++e)
      for (std::size_t v = 0; v < ts[e].points.size(); ++v) {
        sum += std::abs(obs.observed_static[e].points[v].x - ts[e].points[v].x);
        ++n;
      }
  }
  CHECK(std::abs(sum / n - 0.4) < 0.01);
}

TEST_CASE("dataset round trip") {
  RunConfig cfg;
  cfg.model.d_in = 16;
  cfg.data.n_train = 3;
  cfg.data.n_test = 2;
  const DatasetSplits d = generate_dataset(cfg);
  std::stringstream buf;
  write_dataset(d.train, buf);
  const auto back = read_dataset(buf);
  REQUIRE(back.size() == d.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == d.train[i]);

  std::stringstream empty;
  write_dataset({}, empty);
  CHECK(empty.str().find('\n') == empty.str().size() - 1);
  CHECK(read_dataset(empty).empty());
}

TEST_CASE("corrupted records are reported by line number") {
  RunConfig cfg;
  cfg.model.d_in = 8;
  cfg.data.n_train = 4;
  cfg.data.n_test = 0;
  const DatasetSplits d = generate_dataset(cfg);
  std::stringstream buf;
  write_dataset(d.train, buf);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(buf, line)) lines.push_back(line);
  lines[2] = lines[2].substr(0, lines[2].size() / 2);
  std::stringstream bad;
  for (const auto& l : lines) bad << l << '\n';
  CHECK_THROWS_WITH_AS(read_dataset(bad), doctest::Contains("line 3"), DatasetError);

  std::stringstream wrong_schema("{\"schema\":99}\n");
  CHECK_THROWS_AS(read_dataset(wrong_schema), DatasetError);
}

TEST_CASE("parallel generation matches serial generation") {
  RunConfig cfg;
  cfg.model.d_in = 16;
  const auto serial = generate_scenes(cfg, 3, 10, 12, 1);
  const auto parallel = generate_scenes(cfg, 3, 10, 12, 4);
  CHECK(serial == parallel);
  CHECK(serial.front().index == 10);
}
