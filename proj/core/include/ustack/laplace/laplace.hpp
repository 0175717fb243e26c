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
#include <vector>

#include "ustack/geometry/bev.hpp"
#include "ustack/numeric/matrix.hpp"

namespace ustack {

// Scale floor added after the Softplus on every predicted scale.
inline constexpr double kScaleEpsilon = 1e-6;

// Per-vertex Laplace parameters in BEV meters.
struct LaplaceVertex {
  double mu_x = 0.0;
  double b_x = 1.0;
  double mu_y = 0.0;
  double b_y = 1.0;

  friend bool operator==(const LaplaceVertex&, const LaplaceVertex&) = default;
};

struct VertexParamSet {
  std::vector<LaplaceVertex> vertices;

  std::size_t size() const { return vertices.size(); }
  friend bool operator==(const VertexParamSet&, const VertexParamSet&) = default;
};

// L = w1 * l1 + w2 * NLL.
struct LossWeights {
  double w1 = 0.0;
  double w2 = 1.0;

  void validate() const;
  static constexpr LossWeights dynamic_defaults() { return {0.25, 0.6}; }
  static constexpr LossWeights static_defaults() { return {0.0, 1.0}; }
};

struct LaplaceNll {
  double value = 0.0;
  double d_mu = 0.0;  // -sgn(x - mu) / b, with sgn(0) = 0
  double d_b = 0.0;   // 1/b - |x - mu| / b^2
};

// -ln p(x | mu, b) = ln(2b) + |x - mu| / b. Throws ContractError if b < epsilon.
LaplaceNll laplace_nll(double x, double mu, double b, double epsilon = kScaleEpsilon);

// Inverse-CDF draw: mu - b sgn(u) ln(1 - 2|u|) for u in (-0.5, 0.5).
double laplace_sample(double mu, double b, double u);

// Radius t with P(|X - mu| <= t) = p, i.e. -b ln(1 - p).
double coverage_radius(double b, double p);

struct CombinedLossResult {
  double value = 0.0;
  double l1 = 0.0;   // mean |mu - t| over the 2K scalars
  double nll = 0.0;  // mean Laplace NLL over the 2K scalars
  // d(value)/d(mu, b) with the same layout as the prediction.
  VertexParamSet grad;
};

// Fixed index correspondence: pred vertex i is scored against target point i.
CombinedLossResult combined_loss(const VertexParamSet& pred, const VertexSet& target,
                                 const LossWeights& w);

// Matrix forms used by the training loop.
//   params:  M x 4K, columns (mu_x, b_x, mu_y, b_y) per vertex
//   targets: M x 2K, columns (x, y) per vertex
struct MatrixLossResult {
  double value = 0.0;  // mean over elements of the per-element combined loss
  double l1 = 0.0;
  double nll = 0.0;
  Matrix d_params;
};

MatrixLossResult combined_loss(const Matrix& params, const Matrix& targets, const LossWeights& w);

VertexParamSet vertex_params_from_row(const Matrix& params, std::size_t row);
Matrix param_matrix(const std::vector<VertexParamSet>& elements);
Matrix vertex_matrix(const std::vector<VertexSet>& elements, std::size_t k);

}  // namespace ustack
