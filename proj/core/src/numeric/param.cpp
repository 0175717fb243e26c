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

#include "ustack/numeric/param.hpp"

#include <cmath>

#include "ustack/numeric/random.hpp"

namespace ustack {

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const ParamTensor* p : params) n += p->value.size();
  return n;
}

void zero_grads(const ParamList& params) {
  for (ParamTensor* p : params) p->zero_grad();
}

void glorot_uniform(Matrix& m, KeyedRng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& v : m.data()) v = rng.uniform(-a, a);
}

}  // namespace ustack
