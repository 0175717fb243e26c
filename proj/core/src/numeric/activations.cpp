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

#include "ustack/numeric/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ustack {

double softplus(double x, double epsilon) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))) + epsilon;
}

double sigmoid(double x) {
  constexpr double kLow = std::numeric_limits<double>::min();
  const double kHigh = std::nextafter(1.0, 0.0);
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, kLow, kHigh);
}

void softmax_inplace(std::span<double> v) {
  if (v.empty()) return;
  const double m = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    total += x;
  }
  for (double& x : v) x /= total;
}

std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  softmax_inplace(out);
  return out;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out = scores;
  for (std::size_t i = 0; i < out.rows(); ++i) softmax_inplace(out.row(i));
  return out;
}

}  // namespace ustack
