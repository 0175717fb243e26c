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

#include "ustack/numeric/random.hpp"

#include <cmath>
#include <numbers>

namespace ustack {

double KeyedRng::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double KeyedRng::centered_open() {
  // (k + 0.5) / 2^53 - 0.5 for k in [0, 2^53): symmetric, never hits +-0.5.
  const double k = static_cast<double>((*this)() >> 11);
  return (k + 0.5) * 0x1.0p-53 - 0.5;
}

double KeyedRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t KeyedRng::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = max() - max() % n;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return r % n;
}

}  // namespace ustack
