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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ustack/numeric/matrix.hpp"
#include "ustack/numeric/param.hpp"

namespace ustack {

// Central differences (f(t + h e_i) - f(t - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const std::function<double(std::span<const double>)>& f,
                                     std::span<const double> theta, double h);

// Same oracle, perturbing a matrix in place. `f` must read `m` on every call.
// The matrix is restored bit-exactly afterwards.
Matrix finite_diff_grad(const std::function<double()>& f, Matrix& m, double h);

// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
// gradient is ~0 from turning round-off into huge ratios.
inline constexpr double kGradCheckFloor = 1e-3;
double gradient_relative_error(double analytic, double numeric, double floor = kGradCheckFloor);

struct GradCheckReport {
  std::string name;
  std::size_t coordinates = 0;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  // Coordinates left out because their stencil straddles a kink.
  std::size_t kinks = 0;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
  void merge(const GradCheckReport& other);
};

GradCheckReport compare_gradients(const std::string& name, std::span<const double> analytic,
                                  std::span<const double> numeric);

// A central difference is no oracle when a ReLU switch or |x| = 0 lies inside
// [t - h, t + h]. Such a coordinate shows one-sided quotients that disagree
// with each other while one of them still matches the analytic value. A wrong
// analytic gradient matches neither side and is never classified this way.
inline constexpr double kKinkSideMismatch = 0.1;
inline constexpr double kKinkSideMatch = 1e-2;
bool straddles_kink(double analytic, double forward_quotient, double backward_quotient);

// Compares `analytic` with central differences of `f` over every entry of `m`,
// leaving kink-straddling coordinates out of the maxima. `m` is restored bit-exactly.
GradCheckReport check_matrix_gradient(const std::string& name, const std::function<double()>& f, Matrix& m,
                                      const Matrix& analytic, double h);

// Checks the gradients currently stored in `params` against finite differences
// of `loss`. `loss` must be a pure function of the parameter values.
GradCheckReport check_param_gradients(const std::string& name, const std::function<double()>& loss,
                                      const ParamList& params, double h);

}  // namespace ustack
