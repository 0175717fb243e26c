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
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <vector>

#include "ustack/harness/config.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/model.hpp"
#include "ustack/scene/scene.hpp"

namespace ustack {

// Scenes [first, first + count) of the dataset keyed by `seed`, observed with
// cfg.noise. Output is independent of `threads`.
std::vector<SceneSample> generate_scenes(const RunConfig& cfg, std::uint64_t seed, std::size_t first,
                                         std::size_t count, std::size_t threads = 1);

struct DatasetSplits {
  std::vector<SceneSample> train;
  std::vector<SceneSample> test;
};

// Train scenes take indices [0, n_train); test scenes follow them.
DatasetSplits generate_dataset(const RunConfig& cfg, std::size_t threads = 1);

struct EpochLog {
  std::size_t stage = 1;
  std::size_t epoch = 0;
  double loss = 0.0;
  double static_loss = 0.0;
  double dynamic_loss = 0.0;
  double plan_l1 = 0.0;
  double train_l2 = 0.0;  // mean avg-L2 of the trajectories seen during the epoch
};

// Stage 1 updates everything except the planner; stage 2 updates everything.
// Single-threaded and keyed by cfg.seed, so the result is bit-reproducible.
// Throws TrainingError on a non-finite loss.
std::vector<EpochLog> train_model(PlannerModel& model, const std::vector<SceneSample>& data, const RunConfig& cfg,
                                  std::ostream* progress = nullptr);

void write_train_log(std::ostream& out, const std::vector<EpochLog>& log);

// Scenes are scored independently and merged in index order, so the report is
// identical for any thread count (wall time aside).
MetricsReport evaluate_model(const PlannerModel& model, const std::vector<SceneSample>& data, const RunConfig& cfg,
                             std::size_t threads = 1);

// Runs `fn(i)` for i in [0, n) across `threads` workers.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ustack
