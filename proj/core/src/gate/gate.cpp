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

#include "ustack/gate/gate.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "ustack/errors.hpp"
#include "ustack/numeric/activations.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

const std::vector<std::string>& default_ego_feature_names() {
  static const std::vector<std::string> names{"cmd_left", "cmd_straight", "cmd_right", "cmd_na",
                                              "vx",       "vy",           "ax",        "ay"};
  return names;
}

void GateConfig::validate() const {
  if (d_h == 0 || steps == 0) throw ValidationError("GateConfig: d_h and T must be positive");
  if (mode == GateMode::kEgo && ego_features == 0) {
    throw ValidationError("GateConfig: ego mode needs at least one feature");
  }
}

UncertaintyGate::UncertaintyGate(std::string name, GateConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      score_(name + ".attn", cfg_.d_h, 1),
      projection_(name + (cfg_.mode == GateMode::kTemporal ? ".temporal" : ".ego"), cfg_.d_h,
                  cfg_.gate_width()) {}

PoolResult UncertaintyGate::pool_context(const Matrix& queries) const {
  if (queries.rows() == 0) throw ShapeError("pool_context: no query rows");
  if (queries.cols() != cfg_.d_h) {
    throw ShapeError("pool_context: query width " + std::to_string(queries.cols()) +
                     ", expected " + std::to_string(cfg_.d_h));
  }
  const Matrix scores = score_.forward(queries);
  PoolResult r;
  r.queries = queries;
  r.context.weights = softmax(scores.data());
  r.context.c = Matrix(1, cfg_.d_h);
  auto c = r.context.c.row(0);
  for (std::size_t i = 0; i < queries.rows(); ++i) {
    const double a = r.context.weights[i];
    const auto q = queries.row(i);
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += a * q[d];
  }
  return r;
}

Matrix UncertaintyGate::pool_backward(const PoolResult& r, const Matrix& d_context) {
  const Matrix& q = r.queries;
  const auto& alpha = r.context.weights;
  const auto dc = d_context.row(0);
  double c_dot = 0.0;
  const auto c = r.context.c.row(0);
  for (std::size_t d = 0; d < c.size(); ++d) c_dot += c[d] * dc[d];

  Matrix d_scores(q.rows(), 1);
  Matrix d_q(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = q.row(i);
    double q_dot = 0.0;
    for (std::size_t d = 0; d < qi.size(); ++d) q_dot += qi[d] * dc[d];
    d_scores(i, 0) = alpha[i] * (q_dot - c_dot);
    auto dqi = d_q.row(i);
    for (std::size_t d = 0; d < qi.size(); ++d) dqi[d] = alpha[i] * dc[d];
  }
  add_inplace(d_q, score_.backward(q, d_scores));
  return d_q;
}

GateResult UncertaintyGate::gate(const Matrix& context) const {
  const Matrix logits = projection_.forward(context);
  GateResult r;
  r.context = context;
  r.signal.mode = cfg_.mode;
  const std::size_t rows = cfg_.mode == GateMode::kTemporal ? 1 : cfg_.ego_features;
  std::vector<double> values(logits.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double z = logits.data()[i];
    if (!std::isfinite(z)) throw TrainingError("gate: non-finite logit");
    values[i] = sigmoid(z);
  }
  // Row-major (feature, time) reshape of the flat projection.
  r.signal.values = Matrix(rows, cfg_.steps, std::move(values));
  return r;
}

Matrix UncertaintyGate::gate_backward(const GateResult& r, const Matrix& d_gate) {
  require_same_shape(r.signal.values, d_gate, "gate_backward");
  Matrix d_logits(1, d_gate.size());
  for (std::size_t i = 0; i < d_gate.size(); ++i) {
    const double g = r.signal.values.data()[i];
    d_logits(0, i) = d_gate.data()[i] * g * (1.0 - g);
  }
  return projection_.backward(r.context, d_logits);
}

void UncertaintyGate::init(std::uint64_t seed) {
  score_.init_glorot(derive_key(seed, {0}));
  projection_.init_glorot(derive_key(seed, {1}));
}

void UncertaintyGate::collect(ParamList& out) {
  score_.collect(out);
  projection_.collect(out);
}

std::size_t UncertaintyGate::parameter_count() const {
  return score_.weight().value.size() + score_.bias().value.size() +
         projection_.weight().value.size() + projection_.bias().value.size();
}

GlobalContext pool_context(const UncertaintyGate& gate, const Matrix& queries) {
  return gate.pool_context(queries).context;
}

GateSignal temporal_gate(const UncertaintyGate& gate, const GlobalContext& c) {
  if (gate.config().mode != GateMode::kTemporal) {
    throw ValidationError("temporal_gate: gate was built for ego mode");
  }
  return gate.gate(c.c).signal;
}

GateSignal ego_gate(const UncertaintyGate& gate, const GlobalContext& c) {
  if (gate.config().mode != GateMode::kEgo) {
    throw ValidationError("ego_gate: gate was built for temporal mode");
  }
  return gate.gate(c.c).signal;
}

TemporalQueryTensor apply_temporal_gate(const GateSignal& g, const TemporalQueryTensor& q) {
  if (g.values.rows() != 1 || g.values.cols() != q.steps) {
    throw ShapeError("apply_temporal_gate: gate " + g.values.shape_string() + " for T = " +
                     std::to_string(q.steps));
  }
  TemporalQueryTensor out = q;
  for (std::size_t n = 0; n < q.n_queries; ++n)
    for (std::size_t t = 0; t < q.steps; ++t) {
      const double gt = g.values(0, t);
      for (std::size_t d = 0; d < q.d_h; ++d) out.at(n, t, d) *= gt;
    }
  return out;
}

EgoStatusMatrix apply_ego_gate(const GateSignal& g, const EgoStatusMatrix& s) {
  if (!g.values.same_shape(s.values)) {
    throw ShapeError("apply_ego_gate: gate " + g.values.shape_string() + " vs ego status " +
                     s.values.shape_string());
  }
  return {hadamard(g.values, s.values), s.feature_names};
}

TemporalGateGrads apply_temporal_gate_backward(const GateSignal& g, const TemporalQueryTensor& q,
                                               const TemporalQueryTensor& d_out) {
  TemporalGateGrads r{Matrix(1, q.steps), TemporalQueryTensor(q.n_queries, q.steps, q.d_h)};
  for (std::size_t n = 0; n < q.n_queries; ++n)
    for (std::size_t t = 0; t < q.steps; ++t)
      for (std::size_t d = 0; d < q.d_h; ++d) {
        r.d_gate(0, t) += d_out.at(n, t, d) * q.at(n, t, d);
        r.d_input.at(n, t, d) = d_out.at(n, t, d) * g.values(0, t);
      }
  return r;
}

EgoGateGrads apply_ego_gate_backward(const GateSignal& g, const EgoStatusMatrix& s,
                                     const Matrix& d_out) {
  return {hadamard(d_out, s.values), hadamard(d_out, g.values)};
}

void write_gate_csv(std::ostream& out, const GateSignal& g, const std::vector<std::string>& labels) {
  if (labels.size() != g.values.rows()) {
    throw ShapeError("write_gate_csv: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(g.values.rows()) + " rows");
  }
  out << "feature";
  for (std::size_t t = 0; t < g.values.cols(); ++t) {
    out << (t == 0 ? ",t" : ",t-" + std::to_string(t));
  }
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t r = 0; r < g.values.rows(); ++r) {
    out << labels[r];
    for (std::size_t t = 0; t < g.values.cols(); ++t) out << ',' << g.values(r, t);
    out << '\n';
  }
}

}  // namespace ustack
