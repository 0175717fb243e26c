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

#include <span>
#include <vector>

#include "ustack/numeric/matrix.hpp"

namespace ustack {

// ln(1 + e^x) + epsilon in the overflow-safe form max(x, 0) + ln(1 + e^{-|x|}).
// Result is never below epsilon, including for x = -1e6.
double softplus(double x, double epsilon = 0.0);

// Logistic function. Outputs live in the open interval (0, 1): values that would
// round to 0 or 1 are clamped to the nearest representable interior double.
double sigmoid(double x);

// Max-subtracted softmax; outputs are positive and sum to 1.
std::vector<double> softmax(std::span<const double> v);
void softmax_inplace(std::span<double> v);
Matrix softmax_rows(const Matrix& scores);

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
// Subgradient at 0 is 0.
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

}  // namespace ustack
