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

enum class Activation { kIdentity, kRelu };

// Affine layer y = x W + b with W stored as (in x out).
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, std::size_t in, std::size_t out);

  std::size_t in_features() const { return weight_.value.rows(); }
  std::size_t out_features() const { return weight_.value.cols(); }

  Matrix forward(const Matrix& input) const;
  // Accumulates dW and db, returns d(input).
  Matrix backward(const Matrix& input, const Matrix& upstream);

  void init_glorot(std::uint64_t seed);
  void collect(ParamList& out);

  ParamTensor& weight() { return weight_; }
  ParamTensor& bias() { return bias_; }
  const ParamTensor& weight() const { return weight_; }
  const ParamTensor& bias() const { return bias_; }

 private:
  ParamTensor weight_;
  ParamTensor bias_;
};

struct MlpSpec {
  std::vector<std::size_t> layer_sizes;
  Activation hidden_activation = Activation::kRelu;
  Activation output_activation = Activation::kIdentity;

  void validate() const;
};

class Mlp;

// Activation record of one forward pass. Consumed by exactly one backward pass.
struct MlpCache {
  const Mlp* owner = nullptr;
  std::vector<Matrix> layer_inputs;
  std::vector<Matrix> pre_activations;
  bool consumed = false;
};

struct MlpResult {
  Matrix output;
  MlpCache cache;
};

class Mlp {
 public:
  Mlp() = default;
  // Parameters start at zero; call init() for a random start.
  Mlp(std::string name, MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  std::size_t input_size() const { return spec_.layer_sizes.front(); }
  std::size_t output_size() const { return spec_.layer_sizes.back(); }

  MlpResult forward(const Matrix& input) const;
  Matrix infer(const Matrix& input) const;
  Matrix backward(MlpCache& cache, const Matrix& upstream);

  void init(std::uint64_t seed);
  void collect(ParamList& out);
  std::size_t parameter_count() const;

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::string name_;
  MlpSpec spec_;
  std::vector<Linear> layers_;
};

}  // namespace ustack
