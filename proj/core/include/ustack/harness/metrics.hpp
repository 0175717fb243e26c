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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ustack/geometry/bev.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/numeric/matrix.hpp"
#include "ustack/scene/scene.hpp"

namespace ustack {

// Horizons 1 s / 2 s / 3 s on the 0.5 s grid are steps 2 / 4 / 6 (1-based).
inline constexpr std::array<std::size_t, 3> kHorizonSteps{2, 4, 6};
inline constexpr std::array<const char*, 3> kHorizonLabels{"1s", "2s", "3s"};

struct HorizonValues {
  std::array<double, 3> at{};
  double avg = 0.0;
};

// Euclidean displacement at the horizon steps; avg is the mean of the three.
HorizonValues l2_displacement(const Matrix& pred, const Matrix& gt);

// boxes[f] holds the agent boxes at future step f + 1. A step collides when
// the ego disc touches any box (closed condition). Per horizon, the value is
// the fraction of colliding steps among steps 1..h.
HorizonValues collision_rate(const Matrix& pred, const std::vector<std::vector<Box7>>& boxes,
                             double ego_radius = 1.0);

enum PenaltyMetric : std::size_t { kNC = 0, kDAC, kDDC, kTLC, kPenaltyCount };
enum AverageMetric : std::size_t { kTTC = 0, kEP, kHC, kLK, kEC, kAverageCount };

inline constexpr std::array<const char*, kPenaltyCount> kPenaltyNames{"nc", "dac", "ddc", "tlc"};
inline constexpr std::array<const char*, kAverageCount> kAverageNames{"ttc", "ep", "hc", "lk", "ec"};
// Sub-metrics computed from the synthetic world; the rest are fixed at 1.
inline constexpr std::array<bool, kPenaltyCount> kPenaltyActive{true, false, false, false};
inline constexpr std::array<bool, kAverageCount> kAverageActive{true, true, false, true, false};

struct EpdmsScores {
  std::array<double, kPenaltyCount> penalty{1.0, 1.0, 1.0, 1.0};
  std::array<double, kAverageCount> average{1.0, 1.0, 1.0, 1.0, 1.0};
};

struct EpdmsInputs {
  EpdmsScores agent;
  EpdmsScores human;
  std::array<double, kAverageCount> weights{1.0, 1.0, 1.0, 1.0, 1.0};

  void validate() const;
};

// A sub-score counts as 1 when the human reference also fails it (< 0.5).
double epdms_filter(double agent, double human);
// prod_pen filter * sum_avg w * filter / sum w.
double epdms_lite(const EpdmsInputs& in);

// Sub-scores of one trajectory in one scene (NC, EP, TTC, LK active).
EpdmsScores score_trajectory(const Matrix& traj, const SceneSample& scene, const EpdmsConfig& cfg);

// Metric rows in the fixed CSV layout "metric,horizon,value".
struct MetricRow {
  std::string metric;
  std::string horizon;
  double value = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct MetricsReport {
  HorizonValues l2;
  HorizonValues collision;
  double mean_nll = 0.0;
  std::array<double, 2> coverage{};  // nominal 0.5, 0.9
  double epdms = 0.0;
  EpdmsScores epdms_components;      // scene means of the agent sub-scores
  std::size_t scenes = 0;
  std::size_t vertices = 0;
  // Kept out of the CSV so the CSV stays byte-stable across runs.
  double wall_time_per_forward = 0.0;

  std::vector<MetricRow> rows() const;
  static MetricsReport from_rows(const std::vector<MetricRow>& rows);
};

inline constexpr std::array<double, 2> kCoverageLevels{0.5, 0.9};

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics_csv(std::istream& in);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace ustack
