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
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ustack/numeric/gradcheck.hpp"

namespace ustack {

inline constexpr double kGradSuiteStep = 1e-6;
inline constexpr double kGradSuiteTolerance = 1e-5;

struct GradSuiteResult {
  std::vector<GradCheckReport> checks;  // one per operation, merged over seeds
  double tolerance = kGradSuiteTolerance;

  bool passed() const;
};

// Central finite differences against the analytic backward pass of every
// differentiable operation, for seeds base_seed .. base_seed + n_seeds - 1.
GradSuiteResult run_gradient_suite(std::uint64_t base_seed, std::size_t n_seeds = 10, double h = kGradSuiteStep,
                                   double tolerance = kGradSuiteTolerance);

// CSV: check,coordinates,kinks,max_relative_error,max_absolute_error,passed
void write_gradient_report(std::ostream& out, const GradSuiteResult& r);

}  // namespace ustack
