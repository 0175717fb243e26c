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

#include "ustack/harness/ablation.hpp"

#include <ostream>

#include "ustack/errors.hpp"
#include "ustack/harness/pipeline.hpp"

namespace ustack {

const std::vector<AblationArm>& ablation_arms() {
  static const std::vector<AblationArm> arms = {
      {"baseline", false, false, false},
      {"+S", true, false, false},
      {"+D", false, true, false},
      {"+S+D", true, true, false},
      {"+S+D+Gate", true, true, true},
  };
  return arms;
}

std::vector<AblationResult> run_ablation(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds,
                                         std::size_t threads, std::ostream* progress) {
  std::vector<AblationResult> out;
  for (std::uint64_t seed : seeds) {
    RunConfig base = cfg;
    base.seed = seed;
    const DatasetSplits data = generate_dataset(base, threads);
    for (const AblationArm& arm : ablation_arms()) {
      RunConfig c = base;
      c.model.use_static_uncer = arm.use_static_uncer;
      c.model.use_dynamic_uncer = arm.use_dynamic_uncer;
      c.model.use_gate = arm.use_gate;
      PlannerModel model(c.model);
      model.init(seed);
      auto log = train_model(model, data.train, c);
      AblationResult r{arm.name, seed, evaluate_model(model, data.test, c, threads), std::move(log)};
      if (progress) {
        *progress << "ablation seed " << seed << " arm " << arm.name << " l2_avg " << r.report.l2.avg
                  << " epdms " << r.report.epdms << "\n";
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationResult>& results) {
  out << "arm,seed,metric,horizon,value\n";
  for (const AblationResult& r : results) {
    for (const MetricRow& row : r.report.rows()) {
      out << r.arm << ',' << r.seed << ',' << row.metric << ',' << row.horizon << ',' << format_double(row.value)
          << '\n';
    }
  }
}

double ablation_mean(const std::vector<AblationResult>& results, const std::string& arm, const std::string& metric,
                     const std::string& horizon) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const AblationResult& r : results) {
    if (r.arm != arm) continue;
    for (const MetricRow& row : r.report.rows()) {
      if (row.metric == metric && row.horizon == horizon) {
        sum += row.value;
        ++n;
      }
    }
  }
  if (n == 0) throw ValidationError("ablation_mean: no rows for " + arm + " " + metric + " " + horizon);
  return sum / static_cast<double>(n);
}

}  // namespace ustack
