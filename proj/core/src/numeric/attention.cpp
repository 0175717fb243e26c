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

#include "ustack/numeric/attention.hpp"

#include <cmath>

#include "ustack/errors.hpp"
#include "ustack/numeric/activations.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

AttentionSpec AttentionSpec::with_heads(std::size_t d_model, std::size_t n_heads) {
  if (n_heads == 0 || d_model % n_heads != 0) {
    throw ValidationError("AttentionSpec: d_model " + std::to_string(d_model) +
                          " not divisible by n_heads " + std::to_string(n_heads));
  }
  return AttentionSpec{d_model, n_heads, d_model / n_heads};
}

void AttentionSpec::validate() const {
  if (n_heads == 0 || head_dim == 0 || n_heads * head_dim != d_model) {
    throw ValidationError("AttentionSpec: n_heads * head_dim must equal d_model");
  }
}

CrossAttention::CrossAttention(std::string name, AttentionSpec spec)
    : spec_(spec),
      w_q_(name + ".w_q", spec.d_model, spec.d_model),
      w_k_(name + ".w_k", spec.d_model, spec.d_model),
      w_v_(name + ".w_v", spec.d_model, spec.d_model),
      w_o_(name + ".w_o", spec.d_model, spec.d_model) {
  spec_.validate();
}

AttentionResult CrossAttention::forward(const Matrix& queries, const Matrix& keys_values) const {
  const std::size_t d = spec_.d_model;
  if (queries.cols() != d || keys_values.cols() != d) {
    throw ShapeError(w_q_.name + ": inputs " + queries.shape_string() + " / " +
                     keys_values.shape_string() + " need " + std::to_string(d) + " columns");
  }
  if (keys_values.rows() == 0) throw ShapeError(w_q_.name + ": no key/value rows");

  AttentionResult r;
  AttentionCache& c = r.cache;
  c.queries = queries;
  c.keys_values = keys_values;
  c.q_proj = matmul(queries, w_q_.value);
  c.k_proj = matmul(keys_values, w_k_.value);
  c.v_proj = matmul(keys_values, w_v_.value);
  c.heads = Matrix(queries.rows(), d);

  const std::size_t mq = queries.rows();
  const std::size_t mk = keys_values.rows();
  const std::size_t hd = spec_.head_dim;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
  c.weights.reserve(spec_.n_heads);
  for (std::size_t h = 0; h < spec_.n_heads; ++h) {
    const std::size_t off = h * hd;
    Matrix a(mq, mk);
    for (std::size_t i = 0; i < mq; ++i) {
      const double* q = c.q_proj.row(i).data() + off;
      for (std::size_t j = 0; j < mk; ++j) {
        const double* k = c.k_proj.row(j).data() + off;
        double s = 0.0;
        for (std::size_t t = 0; t < hd; ++t) s += q[t] * k[t];
        a(i, j) = s * inv_sqrt;
      }
      softmax_inplace(a.row(i));
      double* out = c.heads.row(i).data() + off;
      for (std::size_t j = 0; j < mk; ++j) {
        const double w = a(i, j);
        const double* v = c.v_proj.row(j).data() + off;
        for (std::size_t t = 0; t < hd; ++t) out[t] += w * v[t];
      }
    }
    c.weights.push_back(std::move(a));
  }
  r.output = matmul(c.heads, w_o_.value);
  return r;
}

Matrix CrossAttention::infer(const Matrix& queries, const Matrix& keys_values) const {
  return forward(queries, keys_values).output;
}

AttentionGrads CrossAttention::backward(AttentionCache& c, const Matrix& upstream) {
  if (c.consumed) throw ContractError(w_q_.name + ": attention cache already consumed");
  if (upstream.rows() != c.queries.rows() || upstream.cols() != spec_.d_model) {
    throw ShapeError(w_q_.name + ": upstream gradient " + upstream.shape_string());
  }
  c.consumed = true;

  const std::size_t mq = c.queries.rows();
  const std::size_t mk = c.keys_values.rows();
  const std::size_t hd = spec_.head_dim;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  add_inplace(w_o_.grad, matmul_at_b(c.heads, upstream));
  const Matrix d_heads = matmul_a_bt(upstream, w_o_.value);

  Matrix d_q(mq, spec_.d_model);
  Matrix d_k(mk, spec_.d_model);
  Matrix d_v(mk, spec_.d_model);
  std::vector<double> d_a(mk);
  for (std::size_t h = 0; h < spec_.n_heads; ++h) {
    const std::size_t off = h * hd;
    const Matrix& a = c.weights[h];
    for (std::size_t i = 0; i < mq; ++i) {
      const double* dh = d_heads.row(i).data() + off;
      double weighted = 0.0;
      for (std::size_t j = 0; j < mk; ++j) {
        const double* v = c.v_proj.row(j).data() + off;
        double* dv = d_v.row(j).data() + off;
        const double aij = a(i, j);
        double s = 0.0;
        for (std::size_t t = 0; t < hd; ++t) {
          s += dh[t] * v[t];
          dv[t] += aij * dh[t];
        }
        d_a[j] = s;
        weighted += aij * s;
      }
      const double* q = c.q_proj.row(i).data() + off;
      double* dq = d_q.row(i).data() + off;
      for (std::size_t j = 0; j < mk; ++j) {
        const double ds = a(i, j) * (d_a[j] - weighted) * inv_sqrt;
        const double* k = c.k_proj.row(j).data() + off;
        double* dk = d_k.row(j).data() + off;
        for (std::size_t t = 0; t < hd; ++t) {
          dq[t] += ds * k[t];
          dk[t] += ds * q[t];
        }
      }
    }
  }

  add_inplace(w_q_.grad, matmul_at_b(c.queries, d_q));
  add_inplace(w_k_.grad, matmul_at_b(c.keys_values, d_k));
  add_inplace(w_v_.grad, matmul_at_b(c.keys_values, d_v));

  AttentionGrads g;
  g.d_queries = matmul_a_bt(d_q, w_q_.value);
  g.d_keys_values = matmul_a_bt(d_k, w_k_.value);
  add_inplace(g.d_keys_values, matmul_a_bt(d_v, w_v_.value));
  return g;
}

void CrossAttention::init(std::uint64_t seed) {
  ParamTensor* ps[] = {&w_q_, &w_k_, &w_v_, &w_o_};
  for (std::size_t i = 0; i < 4; ++i) {
    KeyedRng rng(seed, {i});
    glorot_uniform(ps[i]->value, rng);
  }
}

void CrossAttention::set_identity() {
  for (ParamTensor* p : {&w_q_, &w_k_, &w_v_, &w_o_}) p->value = Matrix::identity(spec_.d_model);
}

void CrossAttention::collect(ParamList& out) {
  out.push_back(&w_q_);
  out.push_back(&w_k_);
  out.push_back(&w_v_);
  out.push_back(&w_o_);
}

std::size_t CrossAttention::parameter_count() const { return 4 * spec_.d_model * spec_.d_model; }

}  // namespace ustack
