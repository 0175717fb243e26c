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
#include <span>
#include <string>
#include <vector>

#include "ustack/laplace/laplace.hpp"
#include "ustack/numeric/mlp.hpp"

namespace ustack {

struct HeadConfig {
  std::size_t d_h = 64;
  std::size_t k = kDynamicVertexCount;
  std::vector<std::size_t> hidden_sizes{64};
  double epsilon = kScaleEpsilon;

  void validate() const;
  MlpSpec mlp_spec() const;
};

struct HeadResult {
  Matrix raw;     // M x 4K network output
  Matrix params;  // M x 4K: mu = raw (+ reference), b = softplus(raw) + epsilon
  MlpCache cache;
};

// Probabilistic vertex head: query -> K Laplace vertices.
class LaplaceHead {
 public:
  LaplaceHead() = default;
  LaplaceHead(std::string name, HeadConfig cfg);

  const HeadConfig& config() const { return cfg_; }

  // `reference` (M x 2K, optional) is added to the location outputs so the
  // network predicts offsets from reference points instead of absolute positions.
  HeadResult forward(const Matrix& queries, const Matrix* reference = nullptr) const;
  // Returns d(queries).
  Matrix backward(HeadResult& result, const Matrix& d_params);

  VertexParamSet head_forward(std::span<const double> query) const;

  void init(std::uint64_t seed);
  void collect(ParamList& out) { mlp_.collect(out); }
  std::size_t parameter_count() const { return mlp_.parameter_count(); }
  Mlp& mlp() { return mlp_; }

 private:
  HeadConfig cfg_;
  Mlp mlp_;
};

}  // namespace ustack
