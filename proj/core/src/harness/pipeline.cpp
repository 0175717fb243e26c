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

#include "ustack/harness/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "ustack/errors.hpp"
#include "ustack/numeric/random.hpp"
#include "ustack/numeric/sgd.hpp"

namespace ustack {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::vector<SceneSample> generate_scenes(const RunConfig& cfg, std::uint64_t seed, std::size_t first,
                                         std::size_t count, std::size_t threads) {
  cfg.validate();
  std::vector<SceneSample> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::size_t index = first + i;
    SceneSample s = generate_scene(cfg.scene_spec(scene_seed(seed, index)));
    s.index = index;
    out[i] = observe(s, cfg.noise, seed, cfg.encoder_spec());
  });
  return out;
}

DatasetSplits generate_dataset(const RunConfig& cfg, std::size_t threads) {
  DatasetSplits d;
  d.train = generate_scenes(cfg, cfg.seed, 0, cfg.data.n_train, threads);
  d.test = generate_scenes(cfg, cfg.seed, cfg.data.n_train, cfg.data.n_test, threads);
  return d;
}

std::vector<EpochLog> train_model(PlannerModel& model, const std::vector<SceneSample>& data, const RunConfig& cfg,
                                  std::ostream* progress) {
  cfg.validate();
  if (data.empty()) throw ValidationError("train: dataset is empty");
  std::vector<SceneInputs> inputs;
  inputs.reserve(data.size());
  for (const SceneSample& s : data) inputs.push_back(make_inputs(s, model.config()));

  const TrainConfig& tc = cfg.train;
  ParamList all = model.parameters();
  zero_grads(all);
  std::vector<EpochLog> log;
  for (std::size_t stage = 1; stage <= 2; ++stage) {
    const std::size_t epochs = stage == 1 ? tc.epochs_stage1 : tc.epochs_stage2;
    if (epochs == 0) continue;
    ParamList trainable = stage == 1 ? model.non_planner_parameters() : all;
    Sgd sgd(trainable, tc.learning_rate, tc.momentum);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      std::vector<std::size_t> order(inputs.size());
      std::iota(order.begin(), order.end(), 0);
      KeyedRng rng(cfg.seed, {0x5407F1E, stage, epoch});
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

      EpochLog e;
      e.stage = stage;
      e.epoch = epoch;
      for (std::size_t start = 0, batch = 0; start < order.size(); start += tc.batch_size, ++batch) {
        const std::size_t end = std::min(order.size(), start + tc.batch_size);
        const double scale = 1.0 / static_cast<double>(end - start);
        for (std::size_t j = start; j < end; ++j) {
          const SceneInputs& in = inputs[order[j]];
          ForwardState st = model.forward(in);
          LossGrads grads;
          const LossBreakdown l = model.loss(st, in, tc, &grads, scale);
          if (!std::isfinite(l.total)) {
            throw TrainingError("train: non-finite loss at stage " + std::to_string(stage) + " epoch " +
                                std::to_string(epoch) + " batch " + std::to_string(batch));
          }
          e.loss += l.total;
          e.static_loss += l.static_loss;
          e.dynamic_loss += l.dynamic_loss;
          e.plan_l1 += l.plan_l1;
          e.train_l2 += l2_displacement(st.trajectory, in.future).avg;
          model.backward(st, grads);
        }
        clip_grad_norm(trainable, tc.clip_norm);
        sgd.step();
        zero_grads(all);
      }
      const double n = static_cast<double>(inputs.size());
      e.loss /= n;
      e.static_loss /= n;
      e.dynamic_loss /= n;
      e.plan_l1 /= n;
      e.train_l2 /= n;
      log.push_back(e);
      if (progress) {
        *progress << "stage " << stage << " epoch " << epoch << " loss " << e.loss << " static " << e.static_loss
                  << " dynamic " << e.dynamic_loss << " plan_l1 " << e.plan_l1 << " l2 " << e.train_l2 << "\n";
      }
    }
  }
  return log;
}

void write_train_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "stage,epoch,loss,static_loss,dynamic_loss,plan_l1,train_l2\n";
  for (const EpochLog& e : log) {
    out << e.stage << ',' << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.static_loss) << ','
        << format_double(e.dynamic_loss) << ',' << format_double(e.plan_l1) << ',' << format_double(e.train_l2)
        << '\n';
  }
}

namespace {

struct SceneEval {
  HorizonValues l2;
  HorizonValues collision;
  double epdms = 0.0;
  EpdmsScores components;
  double nll_sum = 0.0;
  std::size_t scalars = 0;
  std::array<std::size_t, 2> covered{};
};

void accumulate_head(const Matrix& params, const Matrix& targets, SceneEval& out) {
  const std::size_t k = targets.cols() / 2;
  for (std::size_t r = 0; r < params.rows(); ++r) {
    for (std::size_t v = 0; v < k; ++v) {
      for (std::size_t axis = 0; axis < 2; ++axis) {
        const double mu = params(r, 4 * v + 2 * axis);
        const double b = params(r, 4 * v + 2 * axis + 1);
        const double x = targets(r, 2 * v + axis);
        out.nll_sum += laplace_nll(x, mu, b).value;
        ++out.scalars;
        for (std::size_t i = 0; i < kCoverageLevels.size(); ++i) {
          if (std::abs(x - mu) <= coverage_radius(b, kCoverageLevels[i])) ++out.covered[i];
        }
      }
    }
  }
}

}  // namespace

MetricsReport evaluate_model(const PlannerModel& model, const std::vector<SceneSample>& data, const RunConfig& cfg,
                             std::size_t threads) {
  if (data.empty()) throw ValidationError("evaluate: dataset is empty");
  std::vector<SceneEval> per_scene(data.size());
  std::atomic<long long> forward_ns{0};
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const SceneSample& s = data[i];
    const SceneInputs in = make_inputs(s, model.config());
    const auto t0 = std::chrono::steady_clock::now();
    const ForwardState st = model.forward(in);
    forward_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
    SceneEval& e = per_scene[i];
    e.l2 = l2_displacement(st.trajectory, s.ego_future);
    std::vector<std::vector<Box7>> boxes;
    for (std::size_t f = 1; f <= s.future_steps; ++f) boxes.push_back(s.future_boxes(f));
    e.collision = collision_rate(st.trajectory, boxes, cfg.epdms.ego_radius);
    EpdmsInputs ei;
    ei.agent = score_trajectory(st.trajectory, s, cfg.epdms);
    ei.human = score_trajectory(s.ego_future, s, cfg.epdms);
    ei.weights = cfg.epdms.weights;
    e.epdms = epdms_lite(ei);
    e.components = ei.agent;
    if (st.head_static) accumulate_head(st.head_static->params, in.targets_static, e);
    if (st.head_dynamic) accumulate_head(st.head_dynamic->params, in.targets_dynamic, e);
  });

  MetricsReport r;
  r.scenes = data.size();
  r.epdms_components.penalty.fill(0.0);
  r.epdms_components.average.fill(0.0);
  double nll = 0.0;
  std::size_t scalars = 0;
  std::array<std::size_t, 2> covered{};
  for (const SceneEval& e : per_scene) {
    for (std::size_t h = 0; h < 3; ++h) {
      r.l2.at[h] += e.l2.at[h];
      r.collision.at[h] += e.collision.at[h];
    }
    r.l2.avg += e.l2.avg;
    r.collision.avg += e.collision.avg;
    r.epdms += e.epdms;
    for (std::size_t m = 0; m < kPenaltyCount; ++m) r.epdms_components.penalty[m] += e.components.penalty[m];
    for (std::size_t m = 0; m < kAverageCount; ++m) r.epdms_components.average[m] += e.components.average[m];
    nll += e.nll_sum;
    scalars += e.scalars;
    for (std::size_t i = 0; i < covered.size(); ++i) covered[i] += e.covered[i];
  }
  const double n = static_cast<double>(data.size());
  for (std::size_t h = 0; h < 3; ++h) {
    r.l2.at[h] /= n;
    r.collision.at[h] /= n;
  }
  r.l2.avg /= n;
  r.collision.avg /= n;
  r.epdms /= n;
  for (double& v : r.epdms_components.penalty) v /= n;
  for (double& v : r.epdms_components.average) v /= n;
  if (scalars > 0) {
    r.mean_nll = nll / static_cast<double>(scalars);
    for (std::size_t i = 0; i < covered.size(); ++i) {
      r.coverage[i] = static_cast<double>(covered[i]) / static_cast<double>(scalars);
    }
  }
  r.vertices = scalars / 2;
  r.wall_time_per_forward = static_cast<double>(forward_ns.load()) * 1e-9 / n;
  return r;
}

}  // namespace ustack
