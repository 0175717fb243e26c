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

#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "ustack/errors.hpp"
#include "ustack/harness/bench.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/model.hpp"
#include "ustack/harness/pipeline.hpp"
#include "ustack/numeric/checkpoint.hpp"
#include "ustack/numeric/random.hpp"

using namespace ustack;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.model.d_in = 16;
  c.model.d_h = 16;
  c.model.query_hidden = {32};
  c.model.head_hidden = {16};
  c.model.planner_hidden = {32};
  c.model.static_vertices = 8;
  c.train.epochs_stage1 = 2;
  c.train.epochs_stage2 = 2;
  c.data.n_train = 24;
  c.data.n_test = 12;
  c.seed = 1;
  return c;
}

std::string config_text(const RunConfig& c) {
  std::ostringstream out;
  write_config(out, c);
  return out.str();
}

std::string checkpoint_bytes(PlannerModel& m) {
  std::ostringstream out;
  write_checkpoint(out, m.parameters());
  return out.str();
}

Matrix rotate(const Matrix& traj, double phi) {
  Matrix r(traj.rows(), 2);
  for (std::size_t i = 0; i < traj.rows(); ++i) {
    const Point2 p = rotate_about({traj(i, 0), traj(i, 1)}, {0, 0}, phi);
    r(i, 0) = p.x;
    r(i, 1) = p.y;
  }
  return r;
}

}  // namespace

TEST_CASE("config round trip and errors") {
  RunConfig c = small_config();
  c.model.fusion_hidden = {};
  c.model.history_mode = HistoryMode::kTemporalVector;
  c.noise.family = NoiseFamily::kGaussian;
  std::istringstream in(config_text(c));
  CHECK(config_text(parse_config(in)) == config_text(c));

  std::istringstream unknown("[model]\nd_h = 16\n[model]\nwidth = 3\n");
  CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains("line 4"), ConfigError);
  std::istringstream bad_value("# comment\n[train]\nlearning_rate = fast\n");
  CHECK_THROWS_WITH_AS(parse_config(bad_value), doctest::Contains("line 3"), ConfigError);
  std::istringstream bad_section("[optimizer]\n");
  CHECK_THROWS_AS(parse_config(bad_section), ConfigError);
  std::istringstream invalid("[model]\nd_h = 10\nn_heads = 4\n");
  CHECK_THROWS_AS(parse_config(invalid), std::invalid_argument);
}

TEST_CASE("l2 displacement examples") {
  Matrix gt(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    gt(i, 0) = 3.0 * (i + 1);
    gt(i, 1) = 0.1 * i * i;
  }
  const HorizonValues zero = l2_displacement(gt, gt);
  CHECK(zero.avg == 0.0);
  Matrix shifted = gt;
  for (std::size_t i = 0; i < 6; ++i) {
    shifted(i, 0) += 0.3;
    shifted(i, 1) += 0.4;
  }
  const HorizonValues l2 = l2_displacement(shifted, gt);
  for (double v : l2.at) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(l2.avg == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(l2_displacement(Matrix(3, 2), Matrix(3, 2)), ShapeError);
}

TEST_CASE("collision rate examples") {
  const Matrix traj(6, 2, 0.0);
  CHECK(collision_rate(traj, std::vector<std::vector<Box7>>(6), 1.0).avg == 0.0);

  const std::vector<std::vector<Box7>> covering(6, {Box7{0, 0, 0, 2, 4, 1, 0.3}});
  const HorizonValues all = collision_rate(traj, covering, 1.0);
  for (double v : all.at) CHECK(v == 1.0);

  // Box edge at y = 1, exactly one ego radius away.
  const std::vector<std::vector<Box7>> tangent(6, {Box7{0, 2, 0, 2, 4, 1, 0}});
  CHECK(collision_rate(traj, tangent, 1.0).avg == 1.0);
  const std::vector<std::vector<Box7>> apart(6, {Box7{0, 2.001, 0, 2, 4, 1, 0}});
  CHECK(collision_rate(traj, apart, 1.0).avg == 0.0);
}

TEST_CASE("collision rate is invariant under rigid rotation") {
  KeyedRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix traj(6, 2);
    for (std::size_t i = 0; i < 6; ++i) {
      traj(i, 0) = 2.0 * (i + 1) + rng.uniform(-1.0, 1.0);
      traj(i, 1) = rng.uniform(-2.0, 2.0);
    }
    std::vector<std::vector<Box7>> boxes(6);
    for (auto& step : boxes)
      for (int a = 0; a < 3; ++a)
        step.push_back({rng.uniform(0.0, 14.0), rng.uniform(-4.0, 4.0), 0, 2, 4.5, 1.5, rng.uniform(-0.5, 0.5)});
    const double phi = rng.uniform(-3.0, 3.0);
    const Matrix rt = rotate(traj, phi);
    auto rboxes = boxes;
    for (auto& step : rboxes)
      for (Box7& b : step) {
        const Point2 c = rotate_about({b.x, b.y}, {0, 0}, phi);
        b.x = c.x;
        b.y = c.y;
        b.heading = normalize_heading(b.heading + phi);
      }
    const HorizonValues a = collision_rate(traj, boxes);
    const HorizonValues b = collision_rate(rt, rboxes);
    CHECK(a.at == b.at);
  }
}

TEST_CASE("epdms examples") {
  EpdmsInputs in;
  CHECK(epdms_lite(in) == 1.0);

  in.agent.penalty[kNC] = 0.0;
  CHECK(epdms_lite(in) == 0.0);

  EpdmsInputs ex;
  ex.agent.average = {1.0, 0.5, 1.0, 0.0, 1.0};
  CHECK(epdms_lite(ex) == doctest::Approx(0.7).epsilon(1e-15));

  // The human reference fails too, so the agent's failure is forgiven.
  EpdmsInputs forgiven;
  forgiven.agent.penalty[kNC] = 0.0;
  forgiven.human.penalty[kNC] = 0.0;
  CHECK(epdms_lite(forgiven) == 1.0);
  CHECK(epdms_filter(0.2, 0.49) == 1.0);
  CHECK(epdms_filter(0.2, 0.5) == 0.2);

  EpdmsInputs bad;
  bad.agent.average[kEP] = 1.5;
  CHECK_THROWS_AS(epdms_lite(bad), ValidationError);
  EpdmsInputs no_weights;
  no_weights.weights = {0, 0, 0, 0, 0};
  CHECK_THROWS_AS(epdms_lite(no_weights), ValidationError);
}

TEST_CASE("epdms is monotone in every agent sub-score") {
  KeyedRng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    EpdmsInputs in;
    for (double& v : in.agent.penalty) v = rng.uniform();
    for (double& v : in.agent.average) v = rng.uniform();
    for (double& v : in.human.penalty) v = rng.uniform();
    for (double& v : in.human.average) v = rng.uniform();
    for (double& w : in.weights) w = rng.uniform(0.0, 2.0);
    const double base = epdms_lite(in);
    EpdmsInputs up = in;
    const std::size_t which = rng.below(std::size_t{kPenaltyCount} + std::size_t{kAverageCount});
    double& v = which < kPenaltyCount ? up.agent.penalty[which] : up.agent.average[which - kPenaltyCount];
    v = v + rng.uniform() * (1.0 - v);
    CHECK(epdms_lite(up) >= base);
  }
}

TEST_CASE("metrics csv round trip") {
  MetricsReport r;
  r.l2 = {{0.1, 0.2, 0.30000000000000004}, 0.2};
  r.collision = {{0.0, 0.25, 1.0 / 3.0}, 0.19};
  r.mean_nll = -1.5;
  r.coverage = {0.49, 0.91};
  r.epdms = 0.8;
  r.epdms_components.average[kEP] = 0.6;
  r.scenes = 10;
  r.vertices = 1234;
  std::stringstream buf;
  write_metrics_csv(buf, r.rows());
  CHECK(buf.str().rfind("metric,horizon,value\n", 0) == 0);
  CHECK(buf.str().find("epdms_hc,inactive,1") != std::string::npos);
  const auto rows = read_metrics_csv(buf);
  CHECK(rows == r.rows());
  CHECK(MetricsReport::from_rows(rows).rows() == r.rows());
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("zero-weight planner predicts a stationary trajectory") {
  RunConfig c = small_config();
  PlannerModel m(c.model);
  m.init(3);
  for (ParamTensor* p : m.planner_parameters()) p->value.fill(0.0);
  const auto scenes = generate_scenes(c, 2, 0, 2);
  CHECK(m.plan(make_inputs(scenes[0], c.model)) == Matrix(c.model.future_steps, 2));
}

TEST_CASE("a fresh gate equals halving the history weights of the planner") {
  RunConfig c = small_config();
  RunConfig off = c;
  off.model.use_gate = false;
  PlannerModel gated(c.model), plain(off.model);
  gated.init(4);
  plain.init(4);
  const ForwardState fresh = gated.forward(make_inputs(generate_scenes(c, 1, 0, 1)[0], c.model));
  for (double v : fresh.gate->signal.values.data()) CHECK(v == 0.5);
  Matrix& w = plain.planner().layers().front().weight().value;
  for (std::size_t r = 2 * c.model.d_h; r < w.rows(); ++r)
    for (double& x : w.row(r)) x *= 0.5;
  for (const SceneSample& s : generate_scenes(c, 1, 0, 4)) {
    const SceneInputs in = make_inputs(s, c.model);
    CHECK(gated.plan(in) == plain.plan(in));
  }
}

TEST_CASE("switched-off modules carry no parameters") {
  RunConfig c = small_config();
  RunConfig base = c;
  base.model.use_static_uncer = base.model.use_dynamic_uncer = base.model.use_gate = false;
  PlannerModel full(c.model), plain(base.model);
  const ModuleParameterCounts f = full.parameter_counts(), b = plain.parameter_counts();
  CHECK(b.uncertainty_modules() == 0);
  CHECK(f.total() - b.total() == f.fusion_static + f.fusion_dynamic + f.gate);
  CHECK(f.total() == parameter_count(full.parameters()));
  CHECK(b.total() == parameter_count(plain.parameters()));
}

TEST_CASE("one switch changes only its own path") {
  RunConfig c = small_config();
  c.model.use_static_uncer = c.model.use_dynamic_uncer = c.model.use_gate = false;
  PlannerModel base(c.model);
  base.init(5);
  const SceneInputs in = make_inputs(generate_scenes(c, 5, 0, 1)[0], c.model);
  const ForwardState b = base.forward(in);

  RunConfig s = c;
  s.model.use_static_uncer = true;
  PlannerModel ms(s.model);
  ms.init(5);
  const ForwardState fs = ms.forward(in);
  CHECK(fs.uncer_dynamic == b.uncer_dynamic);
  CHECK(fs.history_in == b.history_in);
  CHECK(fs.uncer_static != b.uncer_static);

  RunConfig d = c;
  d.model.use_dynamic_uncer = true;
  PlannerModel md(d.model);
  md.init(5);
  const ForwardState fd = md.forward(in);
  CHECK(fd.uncer_static == b.uncer_static);
  CHECK(fd.history_in == b.history_in);
  CHECK(fd.uncer_dynamic != b.uncer_dynamic);

  RunConfig g = c;
  g.model.use_gate = true;
  PlannerModel mg(g.model);
  mg.init(5);
  const ForwardState fg = mg.forward(in);
  CHECK(fg.uncer_static == b.uncer_static);
  CHECK(fg.uncer_dynamic == b.uncer_dynamic);
  CHECK(fg.history_in != b.history_in);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  RunConfig c = small_config();
  c.train.learning_rate = 0.0;
  const auto data = generate_scenes(c, c.seed, 0, 8);
  PlannerModel m(c.model);
  m.init(c.seed);
  const std::string before = checkpoint_bytes(m);
  train_model(m, data, c);
  CHECK(checkpoint_bytes(m) == before);
}

TEST_CASE("training is bit-reproducible") {
  RunConfig c = small_config();
  const auto data = generate_scenes(c, c.seed, 0, c.data.n_train);
  PlannerModel a(c.model), b(c.model);
  a.init(c.seed);
  b.init(c.seed);
  const auto la = train_model(a, data, c);
  const auto lb = train_model(b, data, c);
  CHECK(checkpoint_bytes(a) == checkpoint_bytes(b));
  std::ostringstream sa, sb;
  write_train_log(sa, la);
  write_train_log(sb, lb);
  CHECK(sa.str() == sb.str());
  CHECK(la.size() == c.train.epochs_stage1 + c.train.epochs_stage2);
}

TEST_CASE("stage-1 loss decreases for seeds 0, 1, 2") {
  for (std::uint64_t seed : {0, 1, 2}) {
    RunConfig c = small_config();
    c.seed = seed;
    c.train.epochs_stage1 = 5;
    c.train.epochs_stage2 = 0;
    c.data.n_train = 48;
    const auto data = generate_scenes(c, seed, 0, c.data.n_train);
    PlannerModel m(c.model);
    m.init(seed);
    const auto log = train_model(m, data, c);
    CHECK(log.back().loss < log.front().loss);
  }
}

TEST_CASE("stage 1 leaves the planner untouched") {
  RunConfig c = small_config();
  c.train.epochs_stage2 = 0;
  const auto data = generate_scenes(c, c.seed, 0, 8);
  PlannerModel m(c.model);
  m.init(c.seed);
  std::ostringstream before;
  write_checkpoint(before, m.planner_parameters());
  train_model(m, data, c);
  std::ostringstream after;
  write_checkpoint(after, m.planner_parameters());
  CHECK(before.str() == after.str());
}

TEST_CASE("evaluation rejects an empty dataset and ignores the thread count") {
  RunConfig c = small_config();
  PlannerModel m(c.model);
  m.init(c.seed);
  CHECK_THROWS_AS(evaluate_model(m, {}, c), ValidationError);
  CHECK_THROWS_AS(train_model(m, {}, c), ValidationError);
  const auto data = generate_scenes(c, c.seed, 0, 6);
  CHECK(evaluate_model(m, data, c, 1).rows() == evaluate_model(m, data, c, 3).rows());
}

TEST_CASE("a trained planner beats constant velocity on clean curved roads") {
  RunConfig c = small_config();
  c.noise = {0.0, 0.0, 0.0, NoiseFamily::kLaplace};
  c.data.curved_fraction = 1.0;
  c.data.n_train = 64;
  c.train.epochs_stage1 = 10;
  c.train.epochs_stage2 = 30;
  const auto data = generate_scenes(c, c.seed, 0, c.data.n_train);
  PlannerModel m(c.model);
  m.init(c.seed);
  train_model(m, data, c);
  double model_l2 = 0.0, cv_l2 = 0.0;
  for (const SceneSample& s : data) {
    model_l2 += l2_displacement(m.plan(make_inputs(s, c.model)), s.ego_future).avg;
    cv_l2 += l2_displacement(constant_velocity_baseline(s), s.ego_future).avg;
  }
  MESSAGE("model ", model_l2 / data.size(), " constant velocity ", cv_l2 / data.size());
  CHECK(model_l2 < cv_l2);
}

TEST_CASE("bench accounting") {
  RunConfig c = small_config();
  const BenchReport r = run_bench(c, 100, 2);
  CHECK(r.parameter_delta == r.uncertainty.parameters.fusion_static + r.uncertainty.parameters.fusion_dynamic +
                                 r.uncertainty.parameters.gate);
  CHECK(r.baseline.parameters.uncertainty_modules() == 0);
  CHECK(r.repetitions == 2);
  CHECK_THROWS_AS(run_bench(c, 99), ValidationError);
}
