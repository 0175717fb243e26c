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

#include "ustack/harness/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "ustack/errors.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/pipeline.hpp"

namespace ustack {

namespace {

constexpr std::size_t kBenchScenes = 16;
constexpr std::size_t kChunk = 20;

// Total seconds for forwards [first, first + count) over the scene ring.
double time_forwards(const PlannerModel& model, const std::vector<SceneInputs>& inputs, std::size_t first,
                     std::size_t count) {
  double sink = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = first; i < first + count; ++i) sink += model.plan(inputs[i % inputs.size()])(0, 0);
  const auto t1 = std::chrono::steady_clock::now();
  if (!std::isfinite(sink)) throw TrainingError("bench: non-finite planner output");
  return std::chrono::duration<double>(t1 - t0).count();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace

BenchReport run_bench(const RunConfig& cfg, std::size_t n_iters, std::size_t repetitions, bool self_comparison) {
  cfg.validate();
  if (n_iters < 100) throw ValidationError("bench: n_iters must be >= 100");
  if (repetitions == 0) throw ValidationError("bench: repetitions must be >= 1");

  PlannerConfig base_cfg = cfg.model;
  base_cfg.use_static_uncer = false;
  base_cfg.use_dynamic_uncer = false;
  base_cfg.use_gate = false;
  const PlannerConfig uncer_cfg = self_comparison ? base_cfg : cfg.model;

  PlannerModel base(base_cfg);
  PlannerModel uncer(uncer_cfg);
  base.init(cfg.seed);
  uncer.init(cfg.seed);

  const auto scenes = generate_scenes(cfg, cfg.seed, 0, kBenchScenes);
  std::vector<SceneInputs> base_inputs;
  std::vector<SceneInputs> uncer_inputs;
  for (const SceneSample& s : scenes) {
    base_inputs.push_back(make_inputs(s, base_cfg));
    uncer_inputs.push_back(make_inputs(s, uncer_cfg));
  }
  time_forwards(base, base_inputs, 0, kBenchScenes);
  time_forwards(uncer, uncer_inputs, 0, kBenchScenes);

  // Arms alternate in short chunks so drift in machine load hits both equally.
  std::vector<double> tb;
  std::vector<double> tu;
  std::vector<double> ratio;
  for (std::size_t r = 0; r < repetitions; ++r) {
    double sb = 0.0;
    double su = 0.0;
    for (std::size_t done = 0; done < n_iters; done += kChunk) {
      const std::size_t count = std::min(kChunk, n_iters - done);
      sb += time_forwards(base, base_inputs, done, count);
      su += time_forwards(uncer, uncer_inputs, done, count);
    }
    tb.push_back(sb / static_cast<double>(n_iters));
    tu.push_back(su / static_cast<double>(n_iters));
    ratio.push_back(tu.back() / tb.back() - 1.0);
  }
  BenchReport rep;
  rep.n_iters = n_iters;
  rep.repetitions = repetitions;
  std::tie(rep.baseline.seconds_per_forward, rep.baseline.seconds_std) = mean_std(tb);
  std::tie(rep.uncertainty.seconds_per_forward, rep.uncertainty.seconds_std) = mean_std(tu);
  std::tie(rep.overhead_mean, rep.overhead_std) = mean_std(ratio);
  rep.baseline.fps = 1.0 / rep.baseline.seconds_per_forward;
  rep.uncertainty.fps = 1.0 / rep.uncertainty.seconds_per_forward;
  rep.baseline.parameters = base.parameter_counts();
  rep.uncertainty.parameters = uncer.parameter_counts();
  rep.parameter_delta = rep.uncertainty.parameters.total() - rep.baseline.parameters.total();
  return rep;
}

void write_bench_csv(std::ostream& out, const BenchReport& r) {
  out << "quantity,value\n"
      << "n_iters," << r.n_iters << '\n'
      << "repetitions," << r.repetitions << '\n'
      << "baseline_seconds_per_forward," << format_double(r.baseline.seconds_per_forward) << '\n'
      << "baseline_seconds_std," << format_double(r.baseline.seconds_std) << '\n'
      << "baseline_fps," << format_double(r.baseline.fps) << '\n'
      << "uncertainty_seconds_per_forward," << format_double(r.uncertainty.seconds_per_forward) << '\n'
      << "uncertainty_seconds_std," << format_double(r.uncertainty.seconds_std) << '\n'
      << "uncertainty_fps," << format_double(r.uncertainty.fps) << '\n'
      << "overhead_mean," << format_double(r.overhead_mean) << '\n'
      << "overhead_std," << format_double(r.overhead_std) << '\n'
      << "baseline_parameters," << r.baseline.parameters.total() << '\n'
      << "uncertainty_parameters," << r.uncertainty.parameters.total() << '\n'
      << "parameter_delta," << r.parameter_delta << '\n'
      << "fusion_static_parameters," << r.uncertainty.parameters.fusion_static << '\n'
      << "fusion_dynamic_parameters," << r.uncertainty.parameters.fusion_dynamic << '\n'
      << "gate_parameters," << r.uncertainty.parameters.gate << '\n';
}

}  // namespace ustack
