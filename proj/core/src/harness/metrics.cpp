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

#include "ustack/harness/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ustack/errors.hpp"

namespace ustack {

namespace {

void require_horizon_grid(const Matrix& pred, const char* what) {
  if (pred.cols() != 2 || pred.rows() < kHorizonSteps.back()) {
    throw ShapeError(std::string(what) + ": trajectory " + pred.shape_string() + " must be at least " +
                     std::to_string(kHorizonSteps.back()) + " x 2");
  }
}

Point2 point_at(const Matrix& traj, std::size_t row) { return {traj(row, 0), traj(row, 1)}; }

double segment_distance(Point2 p, Point2 a, Point2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double polyline_distance(Point2 p, const Polyline& pl) {
  double best = std::numeric_limits<double>::infinity();
  if (pl.points.size() == 1) return distance(p, pl.points[0]);
  for (std::size_t i = 0; i + 1 < pl.points.size(); ++i) {
    best = std::min(best, segment_distance(p, pl.points[i], pl.points[i + 1]));
  }
  return best;
}

double parse_value(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw DatasetError("metrics CSV: bad value '" + s + "'");
  return v;
}

}  // namespace

HorizonValues l2_displacement(const Matrix& pred, const Matrix& gt) {
  require_same_shape(pred, gt, "l2_displacement");
  require_horizon_grid(pred, "l2_displacement");
  HorizonValues out;
  for (std::size_t h = 0; h < kHorizonSteps.size(); ++h) {
    const std::size_t r = kHorizonSteps[h] - 1;
    out.at[h] = std::hypot(pred(r, 0) - gt(r, 0), pred(r, 1) - gt(r, 1));
  }
  out.avg = (out.at[0] + out.at[1] + out.at[2]) / 3.0;
  return out;
}

HorizonValues collision_rate(const Matrix& pred, const std::vector<std::vector<Box7>>& boxes,
                             double ego_radius) {
  require_horizon_grid(pred, "collision_rate");
  if (boxes.size() < pred.rows()) {
    throw ShapeError("collision_rate: boxes for " + std::to_string(boxes.size()) + " steps, trajectory has " +
                     std::to_string(pred.rows()));
  }
  std::vector<int> hit(pred.rows(), 0);
  for (std::size_t f = 0; f < pred.rows(); ++f) {
    for (const Box7& b : boxes[f]) {
      if (point_box_distance(point_at(pred, f), b) <= ego_radius) {
        hit[f] = 1;
        break;
      }
    }
  }
  HorizonValues out;
  for (std::size_t h = 0; h < kHorizonSteps.size(); ++h) {
    const std::size_t n = kHorizonSteps[h];
    int count = 0;
    for (std::size_t f = 0; f < n; ++f) count += hit[f];
    out.at[h] = static_cast<double>(count) / static_cast<double>(n);
  }
  out.avg = (out.at[0] + out.at[1] + out.at[2]) / 3.0;
  return out;
}

void EpdmsInputs::validate() const {
  auto check = [](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("epdms: ") + what + " score must be in [0, 1]");
  };
  for (const EpdmsScores* s : {&agent, &human}) {
    for (double v : s->penalty) check(v, "penalty");
    for (double v : s->average) check(v, "average");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("epdms: weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError("epdms: weights must have a positive sum");
}

double epdms_filter(double agent, double human) { return human < 0.5 ? 1.0 : agent; }

double epdms_lite(const EpdmsInputs& in) {
  in.validate();
  double penalty = 1.0;
  for (std::size_t m = 0; m < kPenaltyCount; ++m) penalty *= epdms_filter(in.agent.penalty[m], in.human.penalty[m]);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t m = 0; m < kAverageCount; ++m) {
    num += in.weights[m] * epdms_filter(in.agent.average[m], in.human.average[m]);
    den += in.weights[m];
  }
  return penalty * num / den;
}

EpdmsScores score_trajectory(const Matrix& traj, const SceneSample& scene, const EpdmsConfig& cfg) {
  require_same_shape(traj, scene.ego_future, "score_trajectory");
  EpdmsScores s;
  const std::size_t n = traj.rows();
  std::vector<std::vector<Box7>> boxes;
  for (std::size_t f = 1; f <= n; ++f) boxes.push_back(scene.future_boxes(f));

  bool collided = false;
  for (std::size_t f = 0; f < n && !collided; ++f) {
    for (const Box7& b : boxes[f]) {
      if (point_box_distance(point_at(traj, f), b) <= cfg.ego_radius) {
        collided = true;
        break;
      }
    }
  }
  s.penalty[kNC] = collided ? 0.0 : 1.0;

  const Point2 g = point_at(scene.ego_future, n - 1);
  const double g2 = g.x * g.x + g.y * g.y;
  if (g2 < 1.0) {
    s.average[kEP] = 1.0;
  } else {
    const Point2 p = point_at(traj, n - 1);
    s.average[kEP] = std::clamp((p.x * g.x + p.y * g.y) / g2, 0.0, 1.0);
  }

  // Constant-velocity rollout from every future step; agents keep their velocities.
  constexpr double kTtcStep = 0.1;
  double ttc = cfg.ttc_horizon;
  const auto steps = static_cast<std::size_t>(std::floor(cfg.ttc_horizon / kTtcStep + 1e-9));
  Point2 prev{0.0, 0.0};
  for (std::size_t f = 0; f < n; ++f) {
    const Point2 p = point_at(traj, f);
    const Point2 v{(p.x - prev.x) / scene.dt, (p.y - prev.y) / scene.dt};
    prev = p;
    const auto& states = scene.agents[scene.current_step() + f + 1];
    for (const AgentState& a : states) {
      for (std::size_t k = 0; k <= steps; ++k) {
        const double tau = static_cast<double>(k) * kTtcStep;
        if (tau >= ttc) break;
        Box7 moved = a.box;
        moved.x += a.vx * tau;
        moved.y += a.vy * tau;
        if (point_box_distance({p.x + v.x * tau, p.y + v.y * tau}, moved) <= cfg.ego_radius) {
          ttc = tau;
          break;
        }
      }
    }
  }
  s.average[kTTC] = std::min(ttc, cfg.ttc_horizon) / cfg.ttc_horizon;

  std::size_t kept = 0;
  for (std::size_t f = 0; f < n; ++f) {
    double best = std::numeric_limits<double>::infinity();
    for (const Polyline& lane : scene.map_elements) best = std::min(best, polyline_distance(point_at(traj, f), lane));
    if (best < cfg.lane_keeping_tolerance) ++kept;
  }
  s.average[kLK] = static_cast<double>(kept) / static_cast<double>(n);
  return s;
}

std::vector<MetricRow> MetricsReport::rows() const {
  std::vector<MetricRow> out;
  for (std::size_t h = 0; h < 3; ++h) out.push_back({"l2", kHorizonLabels[h], l2.at[h]});
  out.push_back({"l2", "avg", l2.avg});
  for (std::size_t h = 0; h < 3; ++h) out.push_back({"collision_rate", kHorizonLabels[h], collision.at[h]});
  out.push_back({"collision_rate", "avg", collision.avg});
  out.push_back({"mean_nll", "all", mean_nll});
  for (std::size_t i = 0; i < kCoverageLevels.size(); ++i) {
    out.push_back({"coverage", format_double(kCoverageLevels[i]), coverage[i]});
  }
  out.push_back({"epdms_lite", "all", epdms});
  for (std::size_t m = 0; m < kPenaltyCount; ++m) {
    out.push_back({std::string("epdms_") + kPenaltyNames[m], kPenaltyActive[m] ? "active" : "inactive",
                   epdms_components.penalty[m]});
  }
  for (std::size_t m = 0; m < kAverageCount; ++m) {
    out.push_back({std::string("epdms_") + kAverageNames[m], kAverageActive[m] ? "active" : "inactive",
                   epdms_components.average[m]});
  }
  out.push_back({"scenes", "all", static_cast<double>(scenes)});
  out.push_back({"vertices", "all", static_cast<double>(vertices)});
  return out;
}

MetricsReport MetricsReport::from_rows(const std::vector<MetricRow>& rows) {
  MetricsReport r;
  for (const MetricRow& row : rows) {
    auto horizon = [&](HorizonValues& hv) {
      if (row.horizon == "avg") return void(hv.avg = row.value);
      for (std::size_t h = 0; h < 3; ++h) {
        if (row.horizon == kHorizonLabels[h]) return void(hv.at[h] = row.value);
      }
      throw DatasetError("metrics CSV: unknown horizon '" + row.horizon + "' for " + row.metric);
    };
    if (row.metric == "l2") horizon(r.l2);
    else if (row.metric == "collision_rate") horizon(r.collision);
    else if (row.metric == "mean_nll") r.mean_nll = row.value;
    else if (row.metric == "epdms_lite") r.epdms = row.value;
    else if (row.metric == "scenes") r.scenes = static_cast<std::size_t>(row.value);
    else if (row.metric == "vertices") r.vertices = static_cast<std::size_t>(row.value);
    else if (row.metric == "coverage") {
      bool found = false;
      for (std::size_t i = 0; i < kCoverageLevels.size(); ++i) {
        if (row.horizon == format_double(kCoverageLevels[i])) {
          r.coverage[i] = row.value;
          found = true;
        }
      }
      if (!found) throw DatasetError("metrics CSV: unknown coverage level '" + row.horizon + "'");
    } else {
      bool found = false;
      for (std::size_t m = 0; m < kPenaltyCount && !found; ++m) {
        if (row.metric == std::string("epdms_") + kPenaltyNames[m]) {
          r.epdms_components.penalty[m] = row.value;
          found = true;
        }
      }
      for (std::size_t m = 0; m < kAverageCount && !found; ++m) {
        if (row.metric == std::string("epdms_") + kAverageNames[m]) {
          r.epdms_components.average[m] = row.value;
          found = true;
        }
      }
      if (!found) throw DatasetError("metrics CSV: unknown metric '" + row.metric + "'");
    }
  }
  return r;
}

std::string format_double(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "metric,horizon,value\n";
  for (const MetricRow& r : rows) out << r.metric << ',' << r.horizon << ',' << format_double(r.value) << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  write_metrics_csv(out, rows);
}

std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "metric,horizon,value") {
    throw DatasetError("metrics CSV: expected header 'metric,horizon,value'");
  }
  std::vector<MetricRow> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow r;
    std::string value;
    if (!std::getline(ss, r.metric, ',') || !std::getline(ss, r.horizon, ',') || !std::getline(ss, value)) {
      throw DatasetError("metrics CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    r.value = parse_value(value);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  return read_metrics_csv(in);
}

}  // namespace ustack
