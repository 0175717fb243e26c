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

#include "ustack/fusion/fusion.hpp"

#include "ustack/errors.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

void FusionConfig::validate() const {
  if (k == 0 || d_h == 0) throw ValidationError("FusionConfig: K and d_h must be positive");
  AttentionSpec::with_heads(d_h, n_heads).validate();
}

MlpSpec FusionConfig::encoder_spec() const {
  MlpSpec spec;
  spec.layer_sizes.push_back(4 * k);
  spec.layer_sizes.insert(spec.layer_sizes.end(), encoder_hidden.begin(), encoder_hidden.end());
  spec.layer_sizes.push_back(d_h);
  return spec;
}

UncertaintyFusion::UncertaintyFusion(std::string name, FusionConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      encoder_(name + ".encoder", cfg_.encoder_spec()),
      attention_(name + ".attention", AttentionSpec::with_heads(cfg_.d_h, cfg_.n_heads)) {}

EncodeResult UncertaintyFusion::encode(const Matrix& params) const {
  if (params.cols() != 4 * cfg_.k) {
    throw ShapeError(encoder_.name() + ": element parameters have " +
                     std::to_string(params.cols()) + " columns, expected 4K = " +
                     std::to_string(4 * cfg_.k));
  }
  Matrix input = params;
  if (cfg_.position_scale != 1.0) {
    for (std::size_t e = 0; e < input.rows(); ++e) {
      auto r = input.row(e);
      for (std::size_t v = 0; v < cfg_.k; ++v) {
        r[4 * v] *= cfg_.position_scale;
        r[4 * v + 2] *= cfg_.position_scale;
      }
    }
  }
  auto [out, cache] = encoder_.forward(input);
  return {std::move(out), std::move(cache)};
}

Matrix UncertaintyFusion::encode_backward(EncodeResult& r, const Matrix& d_features) {
  Matrix d = encoder_.backward(r.cache, d_features);
  if (cfg_.position_scale != 1.0) {
    for (std::size_t e = 0; e < d.rows(); ++e) {
      auto row = d.row(e);
      for (std::size_t v = 0; v < cfg_.k; ++v) {
        row[4 * v] *= cfg_.position_scale;
        row[4 * v + 2] *= cfg_.position_scale;
      }
    }
  }
  return d;
}

FuseResult UncertaintyFusion::fuse(const Matrix& queries, const Matrix& features) const {
  if (queries.cols() != cfg_.d_h || features.cols() != cfg_.d_h) {
    throw ShapeError(encoder_.name() + ": d_h mismatch between queries " + queries.shape_string() +
                     " and uncertainty features " + features.shape_string());
  }
  auto [out, cache] = attention_.forward(queries, features);
  if (cfg_.residual) add_inplace(out, queries);
  return {std::move(out), std::move(cache)};
}

FuseGrads UncertaintyFusion::fuse_backward(FuseResult& r, const Matrix& d_output) {
  auto g = attention_.backward(r.cache, d_output);
  if (cfg_.residual) add_inplace(g.d_queries, d_output);
  return {std::move(g.d_queries), std::move(g.d_keys_values)};
}

void UncertaintyFusion::init(std::uint64_t seed) {
  encoder_.init(derive_key(seed, {0}));
  attention_.init(derive_key(seed, {1}));
}

void UncertaintyFusion::collect(ParamList& out) {
  encoder_.collect(out);
  attention_.collect(out);
}

std::size_t UncertaintyFusion::parameter_count() const {
  return encoder_.parameter_count() + attention_.parameter_count();
}

UncertaintyFeature encode_uncertainty(const UncertaintyFusion& fusion,
                                      const std::vector<VertexParamSet>& elements) {
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].size() != fusion.config().k) {
      throw ShapeError("encode_uncertainty: element " + std::to_string(i) + " has " +
                       std::to_string(elements[i].size()) + " vertices, expected K = " +
                       std::to_string(fusion.config().k));
    }
  }
  if (elements.empty()) return {Matrix(0, fusion.config().d_h)};
  return {fusion.encode(param_matrix(elements)).features};
}

QueryMatrix fuse(const UncertaintyFusion& fusion, const QueryMatrix& queries,
                 const UncertaintyFeature& features) {
  return {fusion.fuse(queries.matrix, features.matrix).output, queries.branch};
}

}  // namespace ustack
