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
#include <string>
#include <vector>

#include "ustack/laplace/laplace.hpp"
#include "ustack/numeric/attention.hpp"
#include "ustack/numeric/mlp.hpp"

namespace ustack {

enum class Branch { kStatic, kDynamic };

// One row per scene element.
struct UncertaintyFeature {
  Matrix matrix;
};

struct QueryMatrix {
  Matrix matrix;
  Branch branch = Branch::kStatic;
};

struct FusionConfig {
  std::size_t k = kDynamicVertexCount;
  std::size_t d_h = 64;
  std::vector<std::size_t> encoder_hidden;
  std::size_t n_heads = 4;
  // out = q + Attention(q, e, e) instead of Attention(q, e, e).
  bool residual = false;
  // Multiplies location parameters before encoding; scales pass through unchanged.
  double position_scale = 1.0;

  void validate() const;
  MlpSpec encoder_spec() const;
};

struct EncodeResult {
  Matrix features;  // M x d_h
  MlpCache cache;
};

struct FuseResult {
  Matrix output;
  AttentionCache cache;
};

struct FuseGrads {
  Matrix d_queries;
  Matrix d_features;
};

// Uncertainty encoder (4K -> d_h MLP) plus the branch's cross-attention.
// Static and dynamic branches each own one instance; nothing is shared.
class UncertaintyFusion {
 public:
  UncertaintyFusion() = default;
  UncertaintyFusion(std::string name, FusionConfig cfg);

  const FusionConfig& config() const { return cfg_; }

  // `params` is M x 4K with (mu_x, b_x, mu_y, b_y) per vertex.
  EncodeResult encode(const Matrix& params) const;
  Matrix encode_backward(EncodeResult& r, const Matrix& d_features);

  FuseResult fuse(const Matrix& queries, const Matrix& features) const;
  FuseGrads fuse_backward(FuseResult& r, const Matrix& d_output);

  void init(std::uint64_t seed);
  void collect(ParamList& out);
  std::size_t parameter_count() const;

  Mlp& encoder() { return encoder_; }
  CrossAttention& attention() { return attention_; }

 private:
  FusionConfig cfg_;
  Mlp encoder_;
  CrossAttention attention_;
};

// Element-level entry points.
UncertaintyFeature encode_uncertainty(const UncertaintyFusion& fusion,
                                      const std::vector<VertexParamSet>& elements);
QueryMatrix fuse(const UncertaintyFusion& fusion, const QueryMatrix& queries,
                 const UncertaintyFeature& features);

}  // namespace ustack
