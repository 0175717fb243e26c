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
#include <iosfwd>

#include "ustack/harness/config.hpp"
#include "ustack/harness/model.hpp"

namespace ustack {

struct BenchArm {
  double seconds_per_forward = 0.0;  // mean over repetitions
  double seconds_std = 0.0;
  double fps = 0.0;
  ModuleParameterCounts parameters;
};

struct BenchReport {
  BenchArm baseline;     // all uncertainty switches off
  BenchArm uncertainty;  // switches as in the config, or off for a self-comparison
  double overhead_mean = 0.0;  // t_uncer / t_base - 1, over repetitions
  double overhead_std = 0.0;
  std::size_t parameter_delta = 0;
  std::size_t n_iters = 0;
  std::size_t repetitions = 0;
};

// Times single-scene forward passes of both arms on the same scenes and seed,
// interleaving the arms within each repetition. Requires n_iters >= 100.
BenchReport run_bench(const RunConfig& cfg, std::size_t n_iters, std::size_t repetitions = 5,
                      bool self_comparison = false);

void write_bench_csv(std::ostream& out, const BenchReport& r);

}  // namespace ustack
