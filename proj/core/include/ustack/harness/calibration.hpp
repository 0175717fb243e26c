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
#include <iosfwd>
#include <string>
#include <vector>

#include "ustack/harness/config.hpp"

namespace ustack {

struct CalibrationSplit {
  double b_true = 0.0;
  double mean_predicted_b = 0.0;
  double relative_error = 0.0;  // |mean_predicted_b - b_true| / b_true
  std::size_t scalars = 0;
};

struct CalibrationReport {
  std::uint64_t seed = 0;
  std::vector<CalibrationSplit> homoscedastic;
  // Dynamic vertices under cfg.noise (the occlusion model).
  double occluded_mean_b = 0.0;
  double visible_mean_b = 0.0;
  std::size_t occluded_scalars = 0;
  std::size_t visible_scalars = 0;
  // Held-out coverage of the occlusion-model heads at nominal 0.5 and 0.9.
  std::array<double, 2> coverage{};
  std::size_t coverage_vertices = 0;
};

// Trains query encoders and heads only (planner loss off, uncertainty modules
// off) once per homoscedastic scale and once on cfg.noise, then reads the
// predicted scales on held-out scenes.
CalibrationReport run_calibration(const RunConfig& cfg, std::uint64_t seed,
                                  const std::vector<double>& b_values = {0.1, 0.3, 1.0},
                                  std::size_t threads = 1);

// CSV: seed,split,quantity,value
void write_calibration_csv(std::ostream& out, const std::vector<CalibrationReport>& reports);

}  // namespace ustack
