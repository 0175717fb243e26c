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

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ustack/harness/config.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/pipeline.hpp"

namespace ustack {

struct AblationArm {
  std::string name;
  bool use_static_uncer = false;
  bool use_dynamic_uncer = false;
  bool use_gate = false;
};

// baseline, +S, +D, +S+D, +S+D+Gate
const std::vector<AblationArm>& ablation_arms();

struct AblationResult {
  std::string arm;
  std::uint64_t seed = 0;
  MetricsReport report;
  std::vector<EpochLog> log;
};

// Every arm of a seed sees the same train/test scenes and the same schedule;
// only the switches differ.
std::vector<AblationResult> run_ablation(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                         std::size_t threads = 1, std::ostream* progress = nullptr);

// CSV: arm,seed,metric,horizon,value
void write_ablation_csv(std::ostream& out, const std::vector<AblationResult>& results);

// Seed-averaged value of (metric, horizon) for one arm.
double ablation_mean(const std::vector<AblationResult>& results, const std::string& arm, const std::string& metric,
                     const std::string& horizon);

}  // namespace ustack
