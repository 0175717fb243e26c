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

#include "ustack/numeric/sgd.hpp"

#include <cmath>

#include "ustack/errors.hpp"

namespace ustack {

Sgd::Sgd(ParamList params, double learning_rate, double momentum)
    : params_(std::move(params)), learning_rate_(learning_rate), momentum_(momentum) {
  if (!(learning_rate >= 0.0)) throw ValidationError("Sgd: learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("Sgd: momentum must be in [0, 1)");
  velocity_.reserve(params_.size());
  for (const ParamTensor* p : params_) velocity_.emplace_back(p->value.rows(), p->value.cols());
}

void Sgd::set_learning_rate(double lr) {
  if (!(lr >= 0.0)) throw ValidationError("Sgd: learning rate must be >= 0");
  learning_rate_ = lr;
}

void Sgd::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto v = velocity_[i].data();
    auto g = params_[i]->grad.data();
    auto x = params_[i]->value.data();
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = momentum_ * v[k] + g[k];
      x[k] -= learning_rate_ * v[k];
    }
    params_[i]->zero_grad();
  }
}

void Sgd::zero_grad() { zero_grads(params_); }

double clip_grad_norm(const ParamList& params, double max_norm) {
  double sq = 0.0;
  for (const ParamTensor* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (ParamTensor* p : params) scale_inplace(p->grad, s);
  }
  return norm;
}

}  // namespace ustack
