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

#include "ustack/numeric/mlp.hpp"

#include "ustack/errors.hpp"
#include "ustack/numeric/activations.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

Linear::Linear(std::string name, std::size_t in, std::size_t out)
    : weight_(name + ".weight", in, out), bias_(name + ".bias", 1, out) {}

Matrix Linear::forward(const Matrix& input) const {
  if (input.cols() != in_features()) {
    throw ShapeError(weight_.name + ": input has " + std::to_string(input.cols()) +
                     " columns, expected " + std::to_string(in_features()));
  }
  Matrix out = matmul(input, weight_.value);
  add_row_broadcast(out, bias_.value.row(0));
  return out;
}

Matrix Linear::backward(const Matrix& input, const Matrix& upstream) {
  if (upstream.cols() != out_features() || upstream.rows() != input.rows()) {
    throw ShapeError(weight_.name + ": upstream gradient " + upstream.shape_string() +
                     " does not match output " + std::to_string(input.rows()) + "x" +
                     std::to_string(out_features()));
  }
  add_inplace(weight_.grad, matmul_at_b(input, upstream));
  accumulate_column_sums(bias_.grad, upstream);
  return matmul_a_bt(upstream, weight_.value);
}

void Linear::init_glorot(std::uint64_t seed) {
  KeyedRng rng(seed);
  glorot_uniform(weight_.value, rng);
  bias_.value.fill(0.0);
}

void Linear::collect(ParamList& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw ValidationError("MlpSpec: need at least 2 layer sizes");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ValidationError("MlpSpec: layer sizes must be positive");
  }
}

Mlp::Mlp(std::string name, MlpSpec spec) : name_(std::move(name)), spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t i = 0; i + 1 < spec_.layer_sizes.size(); ++i) {
    layers_.emplace_back(name_ + ".l" + std::to_string(i), spec_.layer_sizes[i],
                         spec_.layer_sizes[i + 1]);
  }
}

namespace {

void apply_activation(Matrix& m, Activation act) {
  if (act == Activation::kRelu) {
    for (double& v : m.data()) v = relu(v);
  }
}

void apply_activation_grad(Matrix& grad, const Matrix& pre, Activation act) {
  if (act == Activation::kRelu) {
    auto g = grad.data();
    auto z = pre.data();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= relu_grad(z[i]);
  }
}

}  // namespace

MlpResult Mlp::forward(const Matrix& input) const {
  MlpResult result;
  result.cache.owner = this;
  Matrix x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (x.cols() != layers_[i].in_features()) {
      throw ShapeError(name_ + " layer " + std::to_string(i) + ": input has " +
                       std::to_string(x.cols()) + " columns, expected " +
                       std::to_string(layers_[i].in_features()));
    }
    Matrix z = layers_[i].forward(x);
    result.cache.layer_inputs.push_back(std::move(x));
    Matrix a = z;
    const bool last = i + 1 == layers_.size();
    apply_activation(a, last ? spec_.output_activation : spec_.hidden_activation);
    result.cache.pre_activations.push_back(std::move(z));
    x = std::move(a);
  }
  result.output = std::move(x);
  return result;
}

Matrix Mlp::infer(const Matrix& input) const { return forward(input).output; }

Matrix Mlp::backward(MlpCache& cache, const Matrix& upstream) {
  if (cache.consumed) throw ContractError(name_ + ": activation cache already consumed");
  if (cache.owner != this) throw ContractError(name_ + ": cache belongs to a different network");
  const Matrix& out_pre = cache.pre_activations.back();
  if (!upstream.same_shape(out_pre)) {
    throw ShapeError(name_ + ": upstream gradient " + upstream.shape_string() +
                     " does not match output " + out_pre.shape_string());
  }
  cache.consumed = true;
  Matrix grad = upstream;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const bool last = i + 1 == layers_.size();
    apply_activation_grad(grad, cache.pre_activations[i],
                          last ? spec_.output_activation : spec_.hidden_activation);
    grad = layers_[i].backward(cache.layer_inputs[i], grad);
  }
  return grad;
}

void Mlp::init(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i].init_glorot(derive_key(seed, {i}));
}

void Mlp::collect(ParamList& out) {
  for (Linear& l : layers_) l.collect(out);
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Linear& l : layers_) n += l.weight().value.size() + l.bias().value.size();
  return n;
}

}  // namespace ustack
