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

#include "ustack/harness/gradcheck_suite.hpp"

#include <algorithm>
#include <map>
#include <ostream>

#include "ustack/gate/gate.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/model.hpp"
#include "ustack/laplace/head.hpp"
#include "ustack/numeric/activations.hpp"
#include "ustack/numeric/attention.hpp"
#include "ustack/numeric/mlp.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, KeyedRng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = scale * rng.uniform(-1.0, 1.0);
  return m;
}

double weighted_sum(const Matrix& a, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * w.data()[i];
  return s;
}

void randomize_biases(const ParamList& params, KeyedRng& rng) {
  for (ParamTensor* p : params) {
    if (p->value.rows() == 1) {
      for (double& v : p->value.data()) v = 0.1 * rng.uniform(-1.0, 1.0);
    }
  }
}

GradCheckReport check_input(const std::string& name, const std::function<double()>& loss, Matrix& input,
                            const Matrix& analytic, double h) {
  return check_matrix_gradient(name, loss, input, analytic, h);
}

GradCheckReport softplus_check(KeyedRng rng, double h) {
  std::vector<double> x(32);
  std::vector<double> w(32);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform(-6.0, 6.0);
    w[i] = rng.uniform(-1.0, 1.0);
  }
  auto f = [&](std::span<const double> xs) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += w[i] * softplus(xs[i]);
    return s;
  };
  std::vector<double> analytic(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) analytic[i] = w[i] * sigmoid(x[i]);
  const auto numeric = finite_diff_grad(f, x, h);
  return compare_gradients("softplus", analytic, numeric);
}

GradCheckReport mlp_check(KeyedRng rng, double h) {
  Mlp mlp("mlp", MlpSpec{{5, 7, 6, 3}});
  mlp.init(rng());
  ParamList params;
  mlp.collect(params);
  randomize_biases(params, rng);
  Matrix x = random_matrix(4, 5, rng);
  const Matrix w = random_matrix(4, 3, rng);
  auto loss = [&] { return weighted_sum(mlp.infer(x), w); };
  zero_grads(params);
  MlpResult r = mlp.forward(x);
  const Matrix dx = mlp.backward(r.cache, w);
  GradCheckReport rep = check_param_gradients("mlp", loss, params, h);
  rep.merge(check_input("mlp.input", loss, x, dx, h));
  rep.name = "mlp";
  return rep;
}

GradCheckReport attention_check(KeyedRng rng, double h) {
  CrossAttention attn("attn", AttentionSpec{8, 2, 4});
  attn.init(rng());
  ParamList params;
  attn.collect(params);
  Matrix q = random_matrix(3, 8, rng);
  Matrix kv = random_matrix(5, 8, rng);
  const Matrix w = random_matrix(3, 8, rng);
  auto loss = [&] { return weighted_sum(attn.forward(q, kv).output, w); };
  zero_grads(params);
  auto r = attn.forward(q, kv);
  const auto g = attn.backward(r.cache, w);
  GradCheckReport rep = check_param_gradients("cross_attention", loss, params, h);
  rep.merge(check_input("q", loss, q, g.d_queries, h));
  rep.merge(check_input("kv", loss, kv, g.d_keys_values, h));
  rep.name = "cross_attention";
  return rep;
}

GradCheckReport head_check(KeyedRng rng, double h) {
  LaplaceHead head("head", HeadConfig{6, 3, {5}});
  head.init(rng());
  ParamList params;
  head.collect(params);
  randomize_biases(params, rng);
  Matrix q = random_matrix(4, 6, rng);
  const Matrix ref = random_matrix(4, 6, rng, 2.0);
  const Matrix targets = random_matrix(4, 6, rng, 2.0);
  const LossWeights w = LossWeights::dynamic_defaults();
  auto loss = [&] { return combined_loss(head.forward(q, &ref).params, targets, w).value; };
  zero_grads(params);
  HeadResult r = head.forward(q, &ref);
  const Matrix dq = head.backward(r, combined_loss(r.params, targets, w).d_params);
  GradCheckReport rep = check_param_gradients("laplace_head", loss, params, h);
  rep.merge(check_input("q", loss, q, dq, h));
  rep.name = "laplace_nll_softplus_head";
  return rep;
}

GateConfig small_gate(GateMode mode) {
  GateConfig c;
  c.d_h = 6;
  c.steps = 3;
  c.ego_features = 4;
  c.mode = mode;
  return c;
}

GradCheckReport pooling_check(KeyedRng rng, double h) {
  UncertaintyGate gate("gate", small_gate(GateMode::kTemporal));
  gate.init(rng());
  ParamList params;
  gate.score().collect(params);
  randomize_biases(params, rng);
  Matrix q = random_matrix(5, 6, rng);
  const Matrix w = random_matrix(1, 6, rng);
  auto loss = [&] { return weighted_sum(gate.pool_context(q).context.c, w); };
  zero_grads(params);
  const PoolResult r = gate.pool_context(q);
  const Matrix dq = gate.pool_backward(r, w);
  GradCheckReport rep = check_param_gradients("pool", loss, params, h);
  rep.merge(check_input("q", loss, q, dq, h));
  rep.name = "attention_pooling";
  return rep;
}

GradCheckReport temporal_gate_check(KeyedRng rng, double h) {
  UncertaintyGate gate("gate", small_gate(GateMode::kTemporal));
  gate.init(rng());
  ParamList params;
  gate.collect(params);
  randomize_biases(params, rng);
  Matrix q = random_matrix(4, 6, rng);
  TemporalQueryTensor tq(2, 3, 6);
  for (double& v : tq.values) v = rng.uniform(-1.0, 1.0);
  TemporalQueryTensor w(2, 3, 6);
  for (double& v : w.values) v = rng.uniform(-1.0, 1.0);
  Matrix tq_view(1, tq.values.size(), tq.values);
  auto gated_loss = [&](const TemporalQueryTensor& input) {
    const PoolResult p = gate.pool_context(q);
    const GateResult g = gate.gate(p.context.c);
    const TemporalQueryTensor out = apply_temporal_gate(g.signal, input);
    double s = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i) s += out.values[i] * w.values[i];
    return s;
  };
  auto loss = [&] { return gated_loss(tq); };
  zero_grads(params);
  const PoolResult p = gate.pool_context(q);
  const GateResult g = gate.gate(p.context.c);
  const TemporalGateGrads tg = apply_temporal_gate_backward(g.signal, tq, w);
  const Matrix dq = gate.pool_backward(p, gate.gate_backward(g, tg.d_gate));
  GradCheckReport rep = check_param_gradients("temporal_gate", loss, params, h);
  rep.merge(check_input("q", loss, q, dq, h));
  auto loss_tq = [&] {
    TemporalQueryTensor t = tq;
    std::copy(tq_view.data().begin(), tq_view.data().end(), t.values.begin());
    return gated_loss(t);
  };
  rep.merge(check_input("tq", loss_tq, tq_view, Matrix(1, tg.d_input.values.size(), tg.d_input.values), h));
  rep.name = "temporal_gate";
  return rep;
}

GradCheckReport ego_gate_check(KeyedRng rng, double h) {
  UncertaintyGate gate("gate", small_gate(GateMode::kEgo));
  gate.init(rng());
  ParamList params;
  gate.collect(params);
  randomize_biases(params, rng);
  Matrix q = random_matrix(4, 6, rng);
  EgoStatusMatrix s{random_matrix(4, 3, rng, 3.0), {"a", "b", "c", "d"}};
  const Matrix w = random_matrix(4, 3, rng);
  auto loss = [&] {
    const GateResult g = gate.gate(gate.pool_context(q).context.c);
    return weighted_sum(apply_ego_gate(g.signal, s).values, w);
  };
  zero_grads(params);
  const PoolResult p = gate.pool_context(q);
  const GateResult g = gate.gate(p.context.c);
  const EgoGateGrads eg = apply_ego_gate_backward(g.signal, s, w);
  const Matrix dq = gate.pool_backward(p, gate.gate_backward(g, eg.d_gate));
  GradCheckReport rep = check_param_gradients("ego_gate", loss, params, h);
  rep.merge(check_input("q", loss, q, dq, h));
  rep.merge(check_input("ego", loss, s.values, eg.d_input, h));
  rep.name = "ego_gate";
  return rep;
}

GradCheckReport stack_check(KeyedRng rng, double h, HistoryMode mode) {
  PlannerConfig cfg;
  cfg.d_in = 5;
  cfg.d_h = 8;
  cfg.n_heads = 2;
  cfg.query_hidden = {6};
  cfg.head_hidden = {6};
  cfg.fusion_hidden = {};
  cfg.planner_hidden = {7};
  cfg.static_vertices = 3;
  cfg.history_steps = 3;
  cfg.future_steps = 6;
  cfg.temporal_slots = 2;
  cfg.history_mode = mode;
  cfg.detach_heads = false;
  PlannerModel model(cfg);
  model.init(rng());
  // A zero gate passes no gradient upstream; randomize it so the check covers that path.
  if (model.gate()) model.gate()->init(rng());
  ParamList params = model.parameters();
  randomize_biases(params, rng);

  SceneInputs in;
  in.features_static = random_matrix(2, 5, rng);
  in.features_dynamic = random_matrix(3, 5, rng);
  in.reference_static = random_matrix(2, 6, rng, 2.0);
  in.reference_dynamic = random_matrix(3, 10, rng, 2.0);
  in.targets_static = random_matrix(2, 6, rng, 2.0);
  in.targets_dynamic = random_matrix(3, 10, rng, 2.0);
  in.history = random_matrix(8, 3, rng, 2.0);
  in.temporal = TemporalQueryTensor(2, 3, 8);
  for (double& v : in.temporal.values) v = rng.uniform(-1.0, 1.0);
  in.future = random_matrix(6, 2, rng, 3.0);
  TrainConfig tc;

  auto loss = [&] { return model.loss(model.forward(in), in, tc, nullptr).total; };
  zero_grads(params);
  ForwardState st = model.forward(in);
  LossGrads grads;
  model.loss(st, in, tc, &grads);
  model.backward(st, grads);
  GradCheckReport rep = check_param_gradients("stack", loss, params, h);
  rep.name = mode == HistoryMode::kEgoMatrix ? "full_stack_ego_matrix" : "full_stack_temporal";
  return rep;
}

}  // namespace

bool GradSuiteResult::passed() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [&](const GradCheckReport& r) { return r.passed(tolerance); });
}

GradSuiteResult run_gradient_suite(std::uint64_t base_seed, std::size_t n_seeds, double h, double tolerance) {
  using Check = GradCheckReport (*)(KeyedRng, double);
  const std::vector<Check> checks = {
      softplus_check,
      mlp_check,
      attention_check,
      head_check,
      pooling_check,
      temporal_gate_check,
      ego_gate_check,
      [](KeyedRng r, double step) { return stack_check(r, step, HistoryMode::kEgoMatrix); },
      [](KeyedRng r, double step) { return stack_check(r, step, HistoryMode::kTemporalVector); },
  };
  GradSuiteResult out;
  out.tolerance = tolerance;
  for (std::size_t c = 0; c < checks.size(); ++c) {
    GradCheckReport merged;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const GradCheckReport r = checks[c](KeyedRng(base_seed + s, {0x6AD, c}), h);
      if (s == 0) merged = r;
      else merged.merge(r);
    }
    out.checks.push_back(merged);
  }
  return out;
}

void write_gradient_report(std::ostream& out, const GradSuiteResult& r) {
  out << "check,coordinates,kinks,max_relative_error,max_absolute_error,passed\n";
  for (const GradCheckReport& c : r.checks) {
    out << c.name << ',' << c.coordinates << ',' << c.kinks << ',' << format_double(c.max_relative_error) << ','
        << format_double(c.max_absolute_error) << ',' << (c.passed(r.tolerance) ? "true" : "false") << '\n';
  }
}

}  // namespace ustack
