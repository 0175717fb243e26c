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

#include "ustack/numeric/matrix.hpp"
#include "ustack/numeric/param.hpp"

namespace ustack {

struct AttentionSpec {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t head_dim = 16;

  static AttentionSpec with_heads(std::size_t d_model, std::size_t n_heads);
  void validate() const;
};

struct AttentionCache {
  Matrix queries;
  Matrix keys_values;
  Matrix q_proj;   // queries * W_q
  Matrix k_proj;   // keys_values * W_k
  Matrix v_proj;   // keys_values * W_v
  // Row-softmaxed attention weights, one (M_q x M_k) block per head.
  std::vector<Matrix> weights;
  Matrix heads;    // concatenated per-head outputs, M_q x d_model
  bool consumed = false;
};

struct AttentionResult {
  Matrix output;
  AttentionCache cache;
};

struct AttentionGrads {
  Matrix d_queries;
  Matrix d_keys_values;
};

// Multi-head scaled dot-product cross-attention without biases:
//   head_h = softmax((Q Wq_h)(KV Wk_h)^T / sqrt(head_dim)) (KV Wv_h)
//   out    = concat_h(head_h) Wo
class CrossAttention {
 public:
  CrossAttention() = default;
  // Projections start at zero.
  CrossAttention(std::string name, AttentionSpec spec);

  const AttentionSpec& spec() const { return spec_; }

  AttentionResult forward(const Matrix& queries, const Matrix& keys_values) const;
  Matrix infer(const Matrix& queries, const Matrix& keys_values) const;
  AttentionGrads backward(AttentionCache& cache, const Matrix& upstream);

  void init(std::uint64_t seed);
  void set_identity();
  void collect(ParamList& out);
  std::size_t parameter_count() const;

  ParamTensor& w_q() { return w_q_; }
  ParamTensor& w_k() { return w_k_; }
  ParamTensor& w_v() { return w_v_; }
  ParamTensor& w_o() { return w_o_; }

 private:
  AttentionSpec spec_;
  ParamTensor w_q_, w_k_, w_v_, w_o_;
};

}  // namespace ustack
