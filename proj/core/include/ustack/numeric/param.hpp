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
#include <string>
#include <vector>

#include "ustack/numeric/matrix.hpp"

namespace ustack {

class KeyedRng;

// A trainable tensor and its accumulated gradient.
struct ParamTensor {
  ParamTensor() = default;
  ParamTensor(std::string name, std::size_t rows, std::size_t cols)
      : name(std::move(name)), value(rows, cols), grad(rows, cols) {}

  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.fill(0.0); }
};

// Non-owning view over the parameters of a model, in declaration order.
// Optimizers, checkpoints and gradient checks all iterate this order.
using ParamList = std::vector<ParamTensor*>;

std::size_t parameter_count(const ParamList& params);
void zero_grads(const ParamList& params);

// Uniform Glorot initialisation: U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Matrix& m, KeyedRng& rng);

}  // namespace ustack
