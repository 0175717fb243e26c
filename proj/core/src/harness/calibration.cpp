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

#include "ustack/harness/calibration.hpp"

#include <cmath>
#include <ostream>

#include "ustack/harness/metrics.hpp"
#include "ustack/harness/pipeline.hpp"

namespace ustack {

namespace {

RunConfig head_only(const RunConfig& cfg, std::uint64_t seed, const NoiseModel& noise) {
  RunConfig c = cfg;
  c.seed = seed;
  c.noise = noise;
  c.train.w_plan = 0.0;
  c.model.use_static_uncer = false;
  c.model.use_dynamic_uncer = false;
  c.model.use_gate = false;
  return c;
}

PlannerModel train_heads(const RunConfig& c, const std::vector<SceneSample>& train) {
  PlannerModel model(c.model);
  model.init(c.seed);
  train_model(model, train, c);
  return model;
}

// Visits every predicted (b, |x - mu|) scalar of both heads with its occlusion flag.
template <class Fn>
void for_each_scalar(const PlannerModel& model, const std::vector<SceneSample>& data, Fn fn) {
  for (const SceneSample& s : data) {
    const SceneInputs in = make_inputs(s, model.config());
    const ForwardState st = model.forward(in);
    auto visit = [&](const HeadResult& head, const Matrix& targets, bool dynamic) {
      const std::size_t k = targets.cols() / 2;
      for (std::size_t r = 0; r < head.params.rows(); ++r) {
        for (std::size_t v = 0; v < k; ++v) {
          const bool occluded = dynamic && s.occluded_dynamic[r][v] != 0;
          for (std::size_t axis = 0; axis < 2; ++axis) {
            const double mu = head.params(r, 4 * v + 2 * axis);
            const double b = head.params(r, 4 * v + 2 * axis + 1);
            fn(b, std::abs(targets(r, 2 * v + axis) - mu), dynamic, occluded);
          }
        }
      }
    };
    if (st.head_static) visit(*st.head_static, in.targets_static, false);
    if (st.head_dynamic) visit(*st.head_dynamic, in.targets_dynamic, true);
  }
}

}  // namespace

CalibrationReport run_calibration(const RunConfig& cfg, std::uint64_t seed, const std::vector<double>& b_values,
                                  std::size_t threads) {
  cfg.validate();
  CalibrationReport rep;
  rep.seed = seed;
  for (double b : b_values) {
    const RunConfig c = head_only(cfg, seed, NoiseModel{b, 0.0, 0.0, cfg.noise.family});
    const DatasetSplits d = generate_dataset(c, threads);
    const PlannerModel model = train_heads(c, d.train);
    CalibrationSplit split;
    split.b_true = b;
    double sum = 0.0;
    for_each_scalar(model, d.test, [&](double pred_b, double, bool, bool) {
      sum += pred_b;
      ++split.scalars;
    });
    split.mean_predicted_b = sum / static_cast<double>(split.scalars);
    split.relative_error = std::abs(split.mean_predicted_b - b) / b;
    rep.homoscedastic.push_back(split);
  }

  const RunConfig c = head_only(cfg, seed, cfg.noise);
  const DatasetSplits d = generate_dataset(c, threads);
  const PlannerModel model = train_heads(c, d.train);
  double occ = 0.0;
  double vis = 0.0;
  std::size_t total = 0;
  std::array<std::size_t, 2> covered{};
  for_each_scalar(model, d.test, [&](double b, double residual, bool dynamic, bool occluded) {
    if (dynamic) {
      if (occluded) {
        occ += b;
        ++rep.occluded_scalars;
      } else {
        vis += b;
        ++rep.visible_scalars;
      }
    }
    ++total;
    for (std::size_t i = 0; i < kCoverageLevels.size(); ++i) {
      if (residual <= coverage_radius(b, kCoverageLevels[i])) ++covered[i];
    }
  });
  rep.occluded_mean_b = rep.occluded_scalars ? occ / static_cast<double>(rep.occluded_scalars) : 0.0;
  rep.visible_mean_b = rep.visible_scalars ? vis / static_cast<double>(rep.visible_scalars) : 0.0;
  for (std::size_t i = 0; i < covered.size(); ++i) {
    rep.coverage[i] = static_cast<double>(covered[i]) / static_cast<double>(total);
  }
  rep.coverage_vertices = total / 2;
  return rep;
}

void write_calibration_csv(std::ostream& out, const std::vector<CalibrationReport>& reports) {
  out << "seed,split,quantity,value\n";
  for (const CalibrationReport& r : reports) {
    for (const CalibrationSplit& s : r.homoscedastic) {
      const std::string split = "homoscedastic_b" + format_double(s.b_true);
      out << r.seed << ',' << split << ",mean_predicted_b," << format_double(s.mean_predicted_b) << '\n';
      out << r.seed << ',' << split << ",relative_error," << format_double(s.relative_error) << '\n';
    }
    out << r.seed << ",occlusion,occluded_mean_b," << format_double(r.occluded_mean_b) << '\n';
    out << r.seed << ",occlusion,visible_mean_b," << format_double(r.visible_mean_b) << '\n';
    for (std::size_t i = 0; i < kCoverageLevels.size(); ++i) {
      out << r.seed << ",occlusion,coverage_" << format_double(kCoverageLevels[i]) << ','
          << format_double(r.coverage[i]) << '\n';
    }
    out << r.seed << ",occlusion,coverage_vertices," << r.coverage_vertices << '\n';
  }
}

}  // namespace ustack
