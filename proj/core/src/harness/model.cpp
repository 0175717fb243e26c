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

#include "ustack/harness/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ustack/errors.hpp"
#include "ustack/numeric/random.hpp"

namespace ustack {

namespace {

constexpr std::size_t kTemporalRawDim = 8;
constexpr std::uint64_t kTemporalMapKey = 0x7E3A05A1ULL;

std::vector<std::size_t> sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> s{in};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(out);
  return s;
}

Matrix temporal_map(std::size_t d_h) {
  KeyedRng rng(kTemporalMapKey, {d_h});
  Matrix m(kTemporalRawDim, d_h);
  const double scale = 1.0 / std::sqrt(static_cast<double>(kTemporalRawDim));
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

// Mean over rows; zero rows gives a zero vector.
void write_row_mean(const Matrix& m, std::span<double> out) {
  const Matrix mean = column_mean(m);
  std::copy(mean.data().begin(), mean.data().end(), out.begin());
}

Matrix broadcast_mean_grad(std::span<const double> d_mean, std::size_t rows) {
  Matrix out(rows, d_mean.size());
  if (rows == 0) return out;
  const double inv = 1.0 / static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < d_mean.size(); ++c) out(r, c) = d_mean[c] * inv;
  }
  return out;
}

}  // namespace

SceneInputs make_inputs(const SceneSample& s, const PlannerConfig& cfg) {
  if (!s.observed) throw ValidationError("make_inputs: scene " + std::to_string(s.index) + " has no observations");
  if (s.static_vertices != cfg.static_vertices) {
    throw ShapeError("make_inputs: scene has " + std::to_string(s.static_vertices) +
                     " static vertices, model expects " + std::to_string(cfg.static_vertices));
  }
  if (s.history_steps != cfg.history_steps || s.future_steps != cfg.future_steps) {
    throw ShapeError("make_inputs: scene history/future steps do not match the model config");
  }
  SceneInputs in;
  in.features_static = s.input_features_static;
  in.features_dynamic = s.input_features_dynamic;
  if (in.features_static.cols() != cfg.d_in ||
      (in.features_dynamic.rows() > 0 && in.features_dynamic.cols() != cfg.d_in)) {
    throw ShapeError("make_inputs: feature width does not match model d_in " + std::to_string(cfg.d_in));
  }
  in.reference_static = vertex_matrix(s.observed_static, cfg.static_vertices);
  in.reference_dynamic = vertex_matrix(s.observed_dynamic, kDynamicVertexCount);
  in.targets_static = vertex_matrix(s.target_static(), cfg.static_vertices);
  in.targets_dynamic = vertex_matrix(s.target_dynamic(), kDynamicVertexCount);
  in.history = s.ego_history.values;
  in.future = s.ego_future;

  if (cfg.history_mode == HistoryMode::kTemporalVector) {
    const std::size_t T = cfg.history_steps;
    const Matrix map = temporal_map(cfg.d_h);
    // Agents ordered by current distance; ties keep generation order.
    std::vector<std::size_t> order(s.agent_count());
    std::iota(order.begin(), order.end(), 0);
    const auto& now = s.agents[s.current_step()];
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::hypot(now[a].box.x, now[a].box.y) < std::hypot(now[b].box.x, now[b].box.y);
    });
    Matrix raw(cfg.temporal_slots * T, kTemporalRawDim);
    for (std::size_t t = 0; t < T; ++t) {
      auto ego = raw.row(t);
      for (std::size_t f = 0; f < 4; ++f) ego[f] = s.ego_history.values(f, t);
      ego[4] = s.ego_history.values(4, t) / 10.0;
      ego[5] = s.ego_history.values(5, t) / 10.0;
      ego[6] = s.ego_history.values(6, t) / 3.0;
      ego[7] = s.ego_history.values(7, t) / 3.0;
      for (std::size_t slot = 1; slot < cfg.temporal_slots && slot - 1 < order.size(); ++slot) {
        const AgentState& a = s.agents[s.current_step() - t][order[slot - 1]];
        auto r = raw.row(slot * T + t);
        r[0] = a.box.x / 20.0;
        r[1] = a.box.y / 20.0;
        r[2] = a.vx / 10.0;
        r[3] = a.vy / 10.0;
        r[4] = std::cos(a.box.heading);
        r[5] = std::sin(a.box.heading);
        r[6] = a.box.length / 5.0;
        r[7] = a.box.width / 2.0;
      }
    }
    const Matrix projected = matmul(raw, map);
    in.temporal = TemporalQueryTensor(cfg.temporal_slots, T, cfg.d_h);
    std::copy(projected.data().begin(), projected.data().end(), in.temporal.values.begin());
  }
  return in;
}

PlannerModel::PlannerModel(PlannerConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  query_static_ = Mlp("query_static", MlpSpec{sizes(cfg_.d_in, cfg_.query_hidden, cfg_.d_h)});
  query_dynamic_ = Mlp("query_dynamic", MlpSpec{sizes(cfg_.d_in, cfg_.query_hidden, cfg_.d_h)});
  head_static_ = LaplaceHead("head_static", HeadConfig{cfg_.d_h, cfg_.static_vertices, cfg_.head_hidden});
  head_dynamic_ = LaplaceHead("head_dynamic", HeadConfig{cfg_.d_h, kDynamicVertexCount, cfg_.head_hidden});
  if (cfg_.use_static_uncer) {
    fusion_static_.emplace("fusion_static", FusionConfig{cfg_.static_vertices, cfg_.d_h, cfg_.fusion_hidden,
                                                         cfg_.n_heads, cfg_.residual_fusion,
                                                         cfg_.fusion_position_scale});
  }
  if (cfg_.use_dynamic_uncer) {
    fusion_dynamic_.emplace("fusion_dynamic", FusionConfig{kDynamicVertexCount, cfg_.d_h, cfg_.fusion_hidden,
                                                           cfg_.n_heads, cfg_.residual_fusion,
                                                         cfg_.fusion_position_scale});
  }
  if (cfg_.use_gate) {
    GateConfig gc;
    gc.d_h = cfg_.d_h;
    gc.steps = cfg_.history_steps;
    gc.ego_features = cfg_.ego_features();
    gc.mode = cfg_.history_mode == HistoryMode::kEgoMatrix ? GateMode::kEgo : GateMode::kTemporal;
    gate_.emplace("gate", gc);
  }
  planner_ = Mlp("planner", MlpSpec{sizes(planner_input_size(), cfg_.planner_hidden, 2 * cfg_.future_steps)});
}

std::size_t PlannerModel::planner_input_size() const {
  const std::size_t history = cfg_.history_mode == HistoryMode::kEgoMatrix
                                  ? cfg_.ego_features() * cfg_.history_steps
                                  : cfg_.history_steps * cfg_.d_h;
  return 2 * cfg_.d_h + history;
}

void PlannerModel::init(std::uint64_t seed) {
  query_static_.init(derive_key(seed, {1}));
  query_dynamic_.init(derive_key(seed, {2}));
  head_static_.init(derive_key(seed, {3}));
  head_dynamic_.init(derive_key(seed, {4}));
  if (fusion_static_) fusion_static_->init(derive_key(seed, {5}));
  if (fusion_dynamic_) fusion_dynamic_->init(derive_key(seed, {6}));
  // The gate keeps its zero start so every gate value begins at exactly 0.5.
  planner_.init(derive_key(seed, {8}));
}

ForwardState PlannerModel::forward(const SceneInputs& in) const {
  ForwardState st;
  const bool anchor = cfg_.anchor_heads;
  const std::size_t ms = in.features_static.rows();
  const std::size_t md = in.features_dynamic.rows();

  Matrix qs(0, cfg_.d_h);
  Matrix qd(0, cfg_.d_h);
  if (ms > 0) {
    st.query_static = query_static_.forward(in.features_static);
    qs = st.query_static->output;
    st.head_static = head_static_.forward(qs, anchor ? &in.reference_static : nullptr);
  }
  if (md > 0) {
    st.query_dynamic = query_dynamic_.forward(in.features_dynamic);
    qd = st.query_dynamic->output;
    st.head_dynamic = head_dynamic_.forward(qd, anchor ? &in.reference_dynamic : nullptr);
  }

  st.uncer_static = qs;
  if (fusion_static_ && ms > 0) {
    st.encode_static = fusion_static_->encode(st.head_static->params);
    st.fuse_static = fusion_static_->fuse(qs, st.encode_static->features);
    st.uncer_static = st.fuse_static->output;
  }
  st.uncer_dynamic = qd;
  if (fusion_dynamic_ && md > 0) {
    st.encode_dynamic = fusion_dynamic_->encode(st.head_dynamic->params);
    st.fuse_dynamic = fusion_dynamic_->fuse(qd, st.encode_dynamic->features);
    st.uncer_dynamic = st.fuse_dynamic->output;
  }

  // History path: ego matrix (L x T) or temporal queries averaged over slots (T x d_h).
  if (cfg_.history_mode == HistoryMode::kEgoMatrix) {
    if (in.history.rows() != cfg_.ego_features() || in.history.cols() != cfg_.history_steps) {
      throw ShapeError("planner: ego history " + in.history.shape_string() + " does not match config");
    }
    st.history_raw = in.history;
  } else {
    const TemporalQueryTensor& tq = in.temporal;
    if (tq.steps != cfg_.history_steps || tq.d_h != cfg_.d_h || tq.n_queries == 0) {
      throw ShapeError("planner: temporal query tensor does not match config");
    }
    st.history_raw = Matrix(tq.steps, tq.d_h);
    const double inv = 1.0 / static_cast<double>(tq.n_queries);
    for (std::size_t n = 0; n < tq.n_queries; ++n) {
      for (std::size_t t = 0; t < tq.steps; ++t) {
        for (std::size_t k = 0; k < tq.d_h; ++k) st.history_raw(t, k) += inv * tq.at(n, t, k);
      }
    }
  }
  st.history_in = st.history_raw;

  if (gate_) {
    st.pool = gate_->pool_context(vstack(st.uncer_static, st.uncer_dynamic));
    st.gate = gate_->gate(st.pool->context.c);
    const Matrix& g = st.gate->signal.values;
    if (cfg_.history_mode == HistoryMode::kEgoMatrix) {
      st.history_in = hadamard(st.history_raw, g);
    } else {
      // Gating commutes with the slot mean: mean_n(g_t * TQ) = g_t * mean_n(TQ).
      for (std::size_t t = 0; t < st.history_in.rows(); ++t) {
        for (double& v : st.history_in.row(t)) v *= g(0, t);
      }
    }
  }
  const Matrix& history = st.history_in;

  st.planner_input = Matrix(1, planner_input_size());
  auto row = st.planner_input.row(0);
  write_row_mean(st.uncer_static, row.subspan(0, cfg_.d_h));
  write_row_mean(st.uncer_dynamic, row.subspan(cfg_.d_h, cfg_.d_h));
  std::copy(history.data().begin(), history.data().end(), row.begin() + 2 * cfg_.d_h);

  st.planner = planner_.forward(st.planner_input);
  st.trajectory = Matrix(cfg_.future_steps, 2, std::vector<double>(st.planner->output.data().begin(),
                                                                   st.planner->output.data().end()));
  if (!st.trajectory.all_finite()) throw TrainingError("planner: non-finite trajectory");
  return st;
}

LossBreakdown PlannerModel::loss(const ForwardState& st, const SceneInputs& in, const TrainConfig& tc,
                                 LossGrads* grads, double scale) const {
  LossBreakdown out;
  if (st.head_static) {
    const auto r = combined_loss(st.head_static->params, in.targets_static, tc.static_weights);
    out.static_loss = r.value;
    if (grads) {
      grads->d_params_static = r.d_params;
      scale_inplace(grads->d_params_static, scale);
    }
  }
  if (st.head_dynamic) {
    const auto r = combined_loss(st.head_dynamic->params, in.targets_dynamic, tc.dynamic_weights);
    out.dynamic_loss = r.value;
    if (grads) {
      grads->d_params_dynamic = r.d_params;
      scale_inplace(grads->d_params_dynamic, scale);
    }
  }
  require_same_shape(st.trajectory, in.future, "planner loss");
  const double n = static_cast<double>(in.future.size());
  double l1 = 0.0;
  if (grads) grads->d_trajectory = Matrix(in.future.rows(), in.future.cols());
  for (std::size_t i = 0; i < in.future.size(); ++i) {
    const double diff = st.trajectory.data()[i] - in.future.data()[i];
    l1 += std::abs(diff);
    if (grads) {
      const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grads->d_trajectory.data()[i] = scale * tc.w_plan * sgn / n;
    }
  }
  out.plan_l1 = l1 / n;
  out.total = out.static_loss + out.dynamic_loss + tc.w_plan * out.plan_l1;
  return out;
}

void PlannerModel::backward(ForwardState& st, const LossGrads& grads) {
  const std::size_t d = cfg_.d_h;
  const Matrix d_traj_row(1, grads.d_trajectory.size(),
                          std::vector<double>(grads.d_trajectory.data().begin(), grads.d_trajectory.data().end()));
  const Matrix d_input = planner_.backward(st.planner->cache, d_traj_row);
  const auto d_row = d_input.row(0);

  const std::size_t ms = st.uncer_static.rows();
  const std::size_t md = st.uncer_dynamic.rows();
  Matrix d_us = broadcast_mean_grad(d_row.subspan(0, d), ms);
  Matrix d_ud = broadcast_mean_grad(d_row.subspan(d, d), md);
  const auto d_hist = d_row.subspan(2 * d);

  if (gate_) {
    const Matrix& g = st.gate->signal.values;
    Matrix d_gate(g.rows(), g.cols());
    if (cfg_.history_mode == HistoryMode::kEgoMatrix) {
      for (std::size_t i = 0; i < d_gate.size(); ++i) d_gate.data()[i] = d_hist[i] * st.history_raw.data()[i];
    } else {
      for (std::size_t t = 0; t < cfg_.history_steps; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < d; ++k) acc += d_hist[t * d + k] * st.history_raw(t, k);
        d_gate(0, t) = acc;
      }
    }
    const Matrix d_context = gate_->gate_backward(*st.gate, d_gate);
    const Matrix d_queries = gate_->pool_backward(*st.pool, d_context);
    for (std::size_t r = 0; r < ms; ++r) {
      for (std::size_t c = 0; c < d; ++c) d_us(r, c) += d_queries(r, c);
    }
    for (std::size_t r = 0; r < md; ++r) {
      for (std::size_t c = 0; c < d; ++c) d_ud(r, c) += d_queries(ms + r, c);
    }
  }

  auto branch = [&](std::optional<UncertaintyFusion>& fusion, std::optional<EncodeResult>& enc,
                    std::optional<FuseResult>& fused, std::optional<HeadResult>& head,
                    std::optional<MlpResult>& query, LaplaceHead& head_module, Mlp& query_module,
                    Matrix& d_u, const Matrix& d_params_loss) {
    if (!query) return;
    Matrix d_q = d_u;
    Matrix d_params = d_params_loss.empty() ? Matrix(head->params.rows(), head->params.cols()) : d_params_loss;
    if (fusion && fused) {
      FuseGrads fg = fusion->fuse_backward(*fused, d_u);
      d_q = std::move(fg.d_queries);
      const Matrix d_enc = fusion->encode_backward(*enc, fg.d_features);
      if (!cfg_.detach_heads) add_inplace(d_params, d_enc);
    }
    add_inplace(d_q, head_module.backward(*head, d_params));
    query_module.backward(query->cache, d_q);
  };
  branch(fusion_static_, st.encode_static, st.fuse_static, st.head_static, st.query_static, head_static_,
         query_static_, d_us, grads.d_params_static);
  branch(fusion_dynamic_, st.encode_dynamic, st.fuse_dynamic, st.head_dynamic, st.query_dynamic, head_dynamic_,
         query_dynamic_, d_ud, grads.d_params_dynamic);
}

ParamList PlannerModel::non_planner_parameters() {
  ParamList out;
  query_static_.collect(out);
  query_dynamic_.collect(out);
  head_static_.collect(out);
  head_dynamic_.collect(out);
  if (fusion_static_) fusion_static_->collect(out);
  if (fusion_dynamic_) fusion_dynamic_->collect(out);
  if (gate_) gate_->collect(out);
  return out;
}

ParamList PlannerModel::planner_parameters() {
  ParamList out;
  planner_.collect(out);
  return out;
}

ParamList PlannerModel::parameters() {
  ParamList out = non_planner_parameters();
  planner_.collect(out);
  return out;
}

ModuleParameterCounts PlannerModel::parameter_counts() const {
  ModuleParameterCounts c;
  c.query_encoders = query_static_.parameter_count() + query_dynamic_.parameter_count();
  c.heads = head_static_.parameter_count() + head_dynamic_.parameter_count();
  c.fusion_static = fusion_static_ ? fusion_static_->parameter_count() : 0;
  c.fusion_dynamic = fusion_dynamic_ ? fusion_dynamic_->parameter_count() : 0;
  c.gate = gate_ ? gate_->parameter_count() : 0;
  c.planner = planner_.parameter_count();
  return c;
}

}  // namespace ustack
