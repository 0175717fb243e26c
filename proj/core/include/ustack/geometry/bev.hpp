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
#include <string_view>
#include <vector>

namespace ustack {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

// Dynamic-object label. Length runs along the heading, width across it.
// z and height are carried but never enter the BEV vertex representation.
struct Box7 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double width = 0.0;
  double length = 0.0;
  double height = 0.0;
  double heading = 0.0;

  // Throws ValidationError naming the first offending field.
  void validate() const;
  friend bool operator==(const Box7&, const Box7&) = default;
};

// Wraps an angle into (-pi, pi].
double normalize_heading(double theta);

enum class ElementKind { kStatic, kDynamic };

std::string_view to_string(ElementKind kind);

inline constexpr std::size_t kDynamicVertexCount = 5;
inline constexpr std::size_t kDefaultStaticVertexCount = 20;

// Ordered BEV vertices of one scene element.
// Dynamic sets are front-left, front-right, rear-right, rear-left, center.
struct VertexSet {
  std::vector<Point2> points;
  ElementKind kind = ElementKind::kStatic;

  friend bool operator==(const VertexSet&, const VertexSet&) = default;
};

struct Polyline {
  std::vector<Point2> points;

  // >= 2 points and no two consecutive points identical.
  void validate() const;
  double length() const;
  friend bool operator==(const Polyline&, const Polyline&) = default;
};

VertexSet box_to_vertices(const Box7& box);

// Inverse of box_to_vertices on exact rectangles. z and height come back as 0.
// Throws GeometryError when the corner diagonals do not bisect each other
// within 1e-6 m.
Box7 vertices_to_box(const VertexSet& vertices);

// K points at uniform arc-length fractions 0, 1/(K-1), ..., 1. Endpoints are
// copied exactly.
VertexSet resample_polyline(const Polyline& polyline, std::size_t k);

Point2 rotate_about(Point2 p, Point2 center, double angle);
double distance(Point2 a, Point2 b);

// Distance from a point to a (possibly rotated) rectangle; 0 inside.
double point_box_distance(Point2 p, const Box7& box);

}  // namespace ustack
