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

#include "ustack/geometry/bev.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ustack/errors.hpp"

namespace ustack {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kRectangleTolerance = 1e-6;

// Quadrant headings get exact sines/cosines so axis-aligned boxes produce
// exact vertex coordinates.
std::pair<double, double> exact_sincos(double theta) {
  const double t = normalize_heading(theta);
  if (t == 0.0) return {0.0, 1.0};
  if (t == kPi / 2) return {1.0, 0.0};
  if (t == kPi) return {0.0, -1.0};
  if (t == -kPi / 2) return {-1.0, 0.0};
  return {std::sin(t), std::cos(t)};
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("Box7.") + field + " must be positive and finite, got " +
                          std::to_string(v));
  }
}
}  // namespace

void Box7::validate() const {
  for (auto [v, name] : {std::pair{x, "x"}, {y, "y"}, {z, "z"}, {heading, "heading"}}) {
    if (!std::isfinite(v)) throw ValidationError(std::string("Box7.") + name + " must be finite");
  }
  require_positive(width, "width");
  require_positive(length, "length");
  require_positive(height, "height");
}

double normalize_heading(double theta) {
  double t = std::remainder(theta, 2.0 * kPi);  // [-pi, pi]
  if (t <= -kPi) t += 2.0 * kPi;
  return t;
}

std::string_view to_string(ElementKind kind) {
  return kind == ElementKind::kStatic ? "static" : "dynamic";
}

void Polyline::validate() const {
  if (points.size() < 2) throw ValidationError("Polyline: need at least 2 points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      throw ValidationError("Polyline: point " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && points[i] == points[i - 1]) {
      throw ValidationError("Polyline: points " + std::to_string(i - 1) + " and " +
                            std::to_string(i) + " are identical");
    }
  }
}

double Polyline::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

Point2 rotate_about(Point2 p, Point2 center, double angle) {
  const auto [s, c] = exact_sincos(angle);
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return {center.x + c * dx - s * dy, center.y + s * dx + c * dy};
}

VertexSet box_to_vertices(const Box7& box) {
  box.validate();
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const auto [s, c] = exact_sincos(box.heading);
  const Point2 offsets[4] = {{hl, hw}, {hl, -hw}, {-hl, -hw}, {-hl, hw}};
  VertexSet out;
  out.kind = ElementKind::kDynamic;
  out.points.reserve(kDynamicVertexCount);
  for (const Point2& o : offsets) {
    out.points.push_back({box.x + c * o.x - s * o.y, box.y + s * o.x + c * o.y});
  }
  out.points.push_back({box.x, box.y});
  return out;
}

Box7 vertices_to_box(const VertexSet& v) {
  if (v.kind != ElementKind::kDynamic || v.points.size() != kDynamicVertexCount) {
    throw GeometryError("vertices_to_box: expected a dynamic vertex set of 5 points");
  }
  const Point2& fl = v.points[0];
  const Point2& fr = v.points[1];
  const Point2& rr = v.points[2];
  const Point2& rl = v.points[3];
  const Point2 mid_a{0.5 * (fl.x + rr.x), 0.5 * (fl.y + rr.y)};
  const Point2 mid_b{0.5 * (fr.x + rl.x), 0.5 * (fr.y + rl.y)};
  if (distance(mid_a, mid_b) > kRectangleTolerance) {
    throw GeometryError("vertices_to_box: corner diagonals do not bisect each other (not a rectangle)");
  }
  const double diag_a = distance(fl, rr);
  const double diag_b = distance(fr, rl);
  if (std::abs(diag_a - diag_b) > kRectangleTolerance) {
    throw GeometryError("vertices_to_box: unequal diagonals (parallelogram, not a rectangle)");
  }
  Box7 box;
  box.x = 0.5 * (mid_a.x + mid_b.x);
  box.y = 0.5 * (mid_a.y + mid_b.y);
  const Point2 front{0.5 * (fl.x + fr.x), 0.5 * (fl.y + fr.y)};
  const Point2 rear{0.5 * (rl.x + rr.x), 0.5 * (rl.y + rr.y)};
  box.length = distance(front, rear);
  const Point2 left{0.5 * (fl.x + rl.x), 0.5 * (fl.y + rl.y)};
  const Point2 right{0.5 * (fr.x + rr.x), 0.5 * (fr.y + rr.y)};
  box.width = distance(left, right);
  box.heading = normalize_heading(std::atan2(front.y - rear.y, front.x - rear.x));
  return box;
}

VertexSet resample_polyline(const Polyline& polyline, std::size_t k) {
  if (k < 2) throw ValidationError("resample_polyline: K must be at least 2");
  if (polyline.points.size() < 2) throw ValidationError("resample_polyline: need at least 2 points");
  const auto& pts = polyline.points;
  std::vector<double> cumulative(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + distance(pts[i - 1], pts[i]);
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) throw GeometryError("resample_polyline: polyline has zero length");

  VertexSet out;
  out.kind = ElementKind::kStatic;
  out.points.reserve(k);
  out.points.push_back(pts.front());
  std::size_t seg = 0;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(k - 1);
    while (seg + 2 < pts.size() && cumulative[seg + 1] < s) ++seg;
    const double seg_len = cumulative[seg + 1] - cumulative[seg];
    const double f = seg_len > 0.0 ? (s - cumulative[seg]) / seg_len : 0.0;
    const Point2& a = pts[seg];
    const Point2& b = pts[seg + 1];
    out.points.push_back({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)});
  }
  out.points.push_back(pts.back());
  return out;
}

double point_box_distance(Point2 p, const Box7& box) {
  // Express p in the box frame, then clamp to the half extents.
  const double c = std::cos(box.heading);
  const double s = std::sin(box.heading);
  const double dx = p.x - box.x;
  const double dy = p.y - box.y;
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  const double ex = std::max(std::abs(u) - 0.5 * box.length, 0.0);
  const double ey = std::max(std::abs(v) - 0.5 * box.width, 0.0);
  return std::hypot(ex, ey);
}

}  // namespace ustack
