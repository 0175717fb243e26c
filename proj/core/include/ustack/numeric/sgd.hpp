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

#include <vector>

#include "ustack/numeric/matrix.hpp"
#include "ustack/numeric/param.hpp"

namespace ustack {

// SGD with heavy-ball momentum:
//   velocity = momentum * velocity + grad
//   value   -= learning_rate * velocity
// Gradients are reset to zero after every step.
class Sgd {
 public:
  Sgd(ParamList params, double learning_rate, double momentum);

  void step();
  void zero_grad();

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr);
  double momentum() const { return momentum_; }
  const std::vector<Matrix>& velocity() const { return velocity_; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  double learning_rate_;
  double momentum_;
  std::vector<Matrix> velocity_;
};

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

}  // namespace ustack
