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

#include "ustack/laplace/head.hpp"

#include "ustack/errors.hpp"
#include "ustack/numeric/activations.hpp"

namespace ustack {

void HeadConfig::validate() const {
  if (d_h == 0 || k == 0) throw ValidationError("HeadConfig: d_h and K must be positive");
  if (!(epsilon >= 0.0)) throw ValidationError("HeadConfig: epsilon must be >= 0");
}

MlpSpec HeadConfig::mlp_spec() const {
  MlpSpec spec;
  spec.layer_sizes.push_back(d_h);
  spec.layer_sizes.insert(spec.layer_sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  spec.layer_sizes.push_back(4 * k);
  return spec;
}

LaplaceHead::LaplaceHead(std::string name, HeadConfig cfg)
    : cfg_(std::move(cfg)), mlp_(std::move(name), (cfg_.validate(), cfg_.mlp_spec())) {}

HeadResult LaplaceHead::forward(const Matrix& queries, const Matrix* reference) const {
  if (queries.cols() != cfg_.d_h) {
    throw ShapeError(mlp_.name() + ": query width " + std::to_string(queries.cols()) +
                     ", expected d_h = " + std::to_string(cfg_.d_h));
  }
  if (reference != nullptr &&
      (reference->rows() != queries.rows() || reference->cols() != 2 * cfg_.k)) {
    throw ShapeError(mlp_.name() + ": reference points " + reference->shape_string());
  }
  auto [raw, cache] = mlp_.forward(queries);
  HeadResult r{raw, raw, std::move(cache)};
  for (std::size_t e = 0; e < raw.rows(); ++e) {
    auto p = r.params.row(e);
    for (std::size_t v = 0; v < cfg_.k; ++v) {
      p[4 * v + 1] = softplus(p[4 * v + 1], cfg_.epsilon);
      p[4 * v + 3] = softplus(p[4 * v + 3], cfg_.epsilon);
      if (reference != nullptr) {
        p[4 * v] += (*reference)(e, 2 * v);
        p[4 * v + 2] += (*reference)(e, 2 * v + 1);
      }
    }
  }
  return r;
}

Matrix LaplaceHead::backward(HeadResult& result, const Matrix& d_params) {
  require_same_shape(result.params, d_params, "LaplaceHead::backward");
  Matrix d_raw = d_params;
  for (std::size_t e = 0; e < d_raw.rows(); ++e) {
    auto g = d_raw.row(e);
    const auto raw = result.raw.row(e);
    for (std::size_t v = 0; v < cfg_.k; ++v) {
      // d softplus / dx = sigmoid(x)
      g[4 * v + 1] *= sigmoid(raw[4 * v + 1]);
      g[4 * v + 3] *= sigmoid(raw[4 * v + 3]);
    }
  }
  return mlp_.backward(result.cache, d_raw);
}

VertexParamSet LaplaceHead::head_forward(std::span<const double> query) const {
  if (query.size() != cfg_.d_h) {
    throw ShapeError(mlp_.name() + ": query length " + std::to_string(query.size()) +
                     ", expected " + std::to_string(cfg_.d_h));
  }
  return vertex_params_from_row(forward(Matrix::row_vector(query)).params, 0);
}

void LaplaceHead::init(std::uint64_t seed) { mlp_.init(seed); }

}  // namespace ustack
