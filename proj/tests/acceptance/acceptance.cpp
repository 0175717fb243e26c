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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ustack/geometry/bev.hpp"
#include "ustack/harness/ablation.hpp"
#include "ustack/harness/bench.hpp"
#include "ustack/harness/calibration.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/harness/gradcheck_suite.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/model.hpp"
#include "ustack/harness/pipeline.hpp"
#include "ustack/numeric/random.hpp"
#include "ustack_cli/cli.hpp"

namespace fs = std::filesystem;
using namespace ustack;

namespace {

const std::string kConfigDir = USTACK_CONFIG_DIR;
const std::vector<std::uint64_t> kSeeds{0, 1, 2};
const char* const kFullArm = "+S+D+Gate";
const char* const kBaselineArm = "baseline";

struct Context {
  fs::path artifacts;
  std::size_t threads = 1;
};

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

// ---- ablation grid shared by criteria 3, 4 and 5 ----

using GridRows = std::map<std::pair<std::string, std::uint64_t>, std::vector<MetricRow>>;

GridRows read_grid(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  GridRows grid;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) throw std::runtime_error("ablation CSV: malformed line '" + line + "'");
    grid[{f[0], std::stoull(f[1])}].push_back({f[2], f[3], std::stod(f[4])});
  }
  return grid;
}

std::vector<AblationResult> grid_results(const GridRows& grid) {
  std::vector<AblationResult> out;
  for (const auto& [key, rows] : grid) out.push_back({key.first, key.second, MetricsReport::from_rows(rows), {}});
  return out;
}

std::vector<AblationResult> run_grid(const Context& ctx, double* seconds) {
  const RunConfig cfg = load_config(kConfigDir + "/default.cfg");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<AblationResult> results = run_ablation(cfg, kSeeds, ctx.threads, &std::cout);
  if (seconds) *seconds = seconds_since(t0);
  std::ofstream out(ctx.artifacts / "ablation.csv", std::ios::binary);
  write_ablation_csv(out, results);
  return results;
}

// Reuses the grid written by criterion 4 when present.
std::vector<AblationResult> grid_for(const Context& ctx, std::vector<std::string>& notes) {
  const fs::path path = ctx.artifacts / "ablation.csv";
  if (fs::exists(path)) {
    notes.push_back("read ablation grid from " + path.string());
    return grid_results(read_grid(path));
  }
  notes.push_back("no ablation grid on disk; running it");
  return run_grid(ctx, nullptr);
}

const MetricsReport& find(const std::vector<AblationResult>& r, const std::string& arm, std::uint64_t seed) {
  for (const AblationResult& x : r)
    if (x.arm == arm && x.seed == seed) return x.report;
  throw std::runtime_error("ablation grid lacks arm " + arm + " seed " + std::to_string(seed));
}

// ---- criteria ----

Outcome criterion_gradients(const Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  const GradSuiteResult r = run_gradient_suite(0, 10, 1e-6, 1e-5);
  const double secs = seconds_since(t0);
  double worst = 0.0;
  std::size_t kinks = 0, coords = 0;
  Outcome o;
  for (const GradCheckReport& c : r.checks) {
    worst = std::max(worst, c.max_relative_error);
    kinks += c.kinks;
    coords += c.coordinates;
    o.notes.push_back(c.name + ": max rel " + fmt(c.max_relative_error, 3) + " over " +
                      std::to_string(c.coordinates) + " coords, " + std::to_string(c.kinks) + " kink");
  }
  const int code = cli({"gradcheck"});
  o.pass = r.passed() && worst < 1e-5 && secs < 60.0 && code == 0 && r.checks.size() == 9;
  o.detail = "max rel err " + fmt(worst, 3) + " (< 1e-05) at h=1e-06 over 10 seeds, " + std::to_string(kinks) +
             " of " + std::to_string(coords) + " coords on a kink, " + fmt(secs, 3) + " s (< 60 s), gradcheck exit " +
             std::to_string(code);
  return o;
}

std::vector<CalibrationReport> calibration_reports(const Context& ctx, double* seconds) {
  const RunConfig cfg = load_config(kConfigDir + "/calibration.cfg");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<CalibrationReport> reports;
  for (std::uint64_t s : kSeeds) reports.push_back(run_calibration(cfg, s, {0.1, 0.3, 1.0}, ctx.threads));
  *seconds = seconds_since(t0);
  std::ofstream out(ctx.artifacts / "calibration.csv", std::ios::binary);
  write_calibration_csv(out, reports);
  return reports;
}

Outcome criterion_calibration(const Context& ctx) {
  double secs = 0.0;
  const auto reports = calibration_reports(ctx, &secs);
  Outcome o;
  bool scales_ok = true, asym_ok = true;
  double worst = 0.0;
  for (const CalibrationReport& r : reports) {
    std::string line = "seed " + std::to_string(r.seed) + ":";
    for (const CalibrationSplit& s : r.homoscedastic) {
      worst = std::max(worst, s.relative_error);
      scales_ok = scales_ok && s.relative_error <= 0.10;
      line += " b*=" + fmt(s.b_true) + " -> " + fmt(s.mean_predicted_b) + " (" + fmt(100 * s.relative_error, 3) + "%)";
    }
    asym_ok = asym_ok && r.occluded_mean_b > r.visible_mean_b;
    line += "; occluded " + fmt(r.occluded_mean_b) + " vs visible " + fmt(r.visible_mean_b);
    o.notes.push_back(line);
  }
  o.pass = scales_ok && asym_ok && secs < 600.0;
  o.detail = "worst scale error " + fmt(100 * worst, 3) + "% (<= 10%), occluded > visible on " +
             (asym_ok ? "all" : "not all") + " seeds {0,1,2}, " + fmt(secs, 4) + " s (< 600 s)";
  return o;
}

Outcome criterion_coverage(const Context& ctx) {
  Outcome o;
  const auto grid = grid_for(ctx, o.notes);
  bool ok = true;
  double worst = 0.0;
  std::size_t min_vertices = SIZE_MAX;
  for (std::uint64_t s : kSeeds) {
    const MetricsReport& r = find(grid, kFullArm, s);
    for (std::size_t i = 0; i < 2; ++i) {
      const double gap = std::abs(r.coverage[i] - kCoverageLevels[i]);
      worst = std::max(worst, gap);
      ok = ok && gap <= 0.03;
    }
    min_vertices = std::min(min_vertices, r.vertices);
    o.notes.push_back("seed " + std::to_string(s) + ": coverage@0.5 " + fmt(r.coverage[0]) + ", @0.9 " +
                      fmt(r.coverage[1]) + " on " + std::to_string(r.vertices) + " held-out vertices");
  }
  ok = ok && min_vertices >= 10000;
  o.pass = ok;
  o.detail = "full-stack model, worst |coverage - p| " + fmt(worst, 3) + " (<= 0.03) for p in {0.5, 0.9}, >= " +
             std::to_string(min_vertices) + " held-out vertices per seed (>= 10000)";
  return o;
}

Outcome criterion_l2(const Context& ctx) {
  double secs = 0.0;
  const auto grid = run_grid(ctx, &secs);
  Outcome o;
  for (const AblationArm& arm : ablation_arms()) {
    o.notes.push_back(arm.name + ": avg L2 " + fmt(ablation_mean(grid, arm.name, "l2", "avg"), 5) + " m, EPDMS " +
                      fmt(ablation_mean(grid, arm.name, "epdms_lite", "all"), 5));
  }
  // Stage-1 optimization sanity on the same runs.
  for (const AblationResult& r : grid) {
    if (r.arm != kFullArm) continue;
    double first = 0.0, last = 0.0;
    bool seen = false;
    for (const EpochLog& e : r.log) {
      if (e.stage != 1) continue;
      if (!seen) first = e.loss;
      seen = true;
      last = e.loss;
    }
    o.notes.push_back("seed " + std::to_string(r.seed) + " stage-1 loss " + fmt(first, 5) + " -> " + fmt(last, 5) +
                      (last < first ? " (decreasing)" : " (NOT decreasing)"));
  }
  const double full = ablation_mean(grid, kFullArm, "l2", "avg");
  const double base = ablation_mean(grid, kBaselineArm, "l2", "avg");
  o.pass = full < base && secs < 1800.0;
  o.detail = "seed-averaged avg L2 full " + fmt(full, 5) + " m vs baseline " + fmt(base, 5) +
             " m (full must be strictly lower), grid " + fmt(secs, 4) + " s (< 1800 s), CSV " +
             (ctx.artifacts / "ablation.csv").string();
  return o;
}

Outcome criterion_epdms(const Context& ctx) {
  Outcome o;
  EpdmsInputs worked;
  worked.agent.average = {1.0, 0.5, 1.0, 0.0, 1.0};
  const double v07 = epdms_lite(worked);
  EpdmsInputs collide;
  collide.agent.penalty[kNC] = 0.0;
  const double v_collide = epdms_lite(collide);
  EpdmsInputs forgiven = collide;
  forgiven.human.penalty[kNC] = 0.0;
  const double v_forgiven = epdms_lite(forgiven);
  const double v_ones = epdms_lite(EpdmsInputs{});
  const bool formulas = v07 == 0.7 && v_collide == 0.0 && v_forgiven == 1.0 && v_ones == 1.0;
  o.notes.push_back("0.7 example -> " + fmt(v07, 17) + "; NC fail -> " + fmt(v_collide) + "; human also fails -> " +
                    fmt(v_forgiven) + "; all ones -> " + fmt(v_ones));

  const auto grid = grid_for(ctx, o.notes);
  const double full = ablation_mean(grid, kFullArm, "epdms_lite", "all");
  const double base = ablation_mean(grid, kBaselineArm, "epdms_lite", "all");
  o.pass = formulas && full >= base;
  o.detail = "seed-averaged epdms_lite full " + fmt(full, 5) + " vs baseline " + fmt(base, 5) +
             " (full >= baseline), formula examples " + (formulas ? "exact" : "WRONG");
  return o;
}

Outcome criterion_overhead(const Context& ctx) {
  const RunConfig cfg = load_config(kConfigDir + "/default.cfg");
  const BenchReport r = run_bench(cfg, 1000, 5, false);
  const BenchReport self = run_bench(cfg, 1000, 5, true);
  std::ofstream out(ctx.artifacts / "bench.csv", std::ios::binary);
  write_bench_csv(out, r);
  const ModuleParameterCounts& p = r.uncertainty.parameters;
  const std::size_t modules = p.fusion_static + p.fusion_dynamic + p.gate;
  const bool accounting = r.parameter_delta == modules &&
                          r.uncertainty.parameters.total() - r.baseline.parameters.total() == modules;
  Outcome o;
  o.notes.push_back("baseline " + fmt(r.baseline.fps, 5) + " fps, uncertainty " + fmt(r.uncertainty.fps, 5) +
                    " fps; parameters " + std::to_string(r.baseline.parameters.total()) + " -> " +
                    std::to_string(r.uncertainty.parameters.total()));
  o.notes.push_back("self-comparison overhead " + fmt(100 * self.overhead_mean, 3) + "% +- " +
                    fmt(100 * self.overhead_std, 3) + "% (expected within +-5%)");
  o.pass = r.overhead_mean < 0.20 && accounting;
  o.detail = "forward overhead " + fmt(100 * r.overhead_mean, 3) + "% +- " + fmt(100 * r.overhead_std, 3) +
             "% over 5 reps (< 20%), parameter delta " + std::to_string(r.parameter_delta) + " = fusion_s " +
             std::to_string(p.fusion_static) + " + fusion_d " + std::to_string(p.fusion_dynamic) + " + gate " +
             std::to_string(p.gate) + (accounting ? " (exact)" : " (MISMATCH)");
  return o;
}

Outcome criterion_determinism(const Context& ctx) {
  const std::string cfg = kConfigDir + "/default.cfg";
  const fs::path root = ctx.artifacts / "determinism";
  fs::remove_all(root);
  Outcome o;
  bool ran = true;
  for (const char* run : {"run1", "run2"}) {
    const std::string dir = (root / run).string();
    ran = ran && cli({"gen-data", "--config", cfg, "--seed", "3", "--out", dir, "--threads", "4"}) == 0;
    ran = ran && cli({"train", "--config", cfg, "--seed", "3", "--data", dir, "--out", dir}) == 0;
    ran = ran && cli({"eval", "--config", cfg, "--seed", "3", "--data", dir, "--out", dir, "--threads", "1"}) == 0;
  }
  const std::string n_dir = (root / "run1_threads4").string();
  ran = ran && cli({"eval", "--config", cfg, "--seed", "3", "--data", (root / "run1").string(), "--checkpoint",
                    (root / "run1" / "model.ckpt").string(), "--out", n_dir, "--threads", "4"}) == 0;
  bool same = ran;
  for (const char* f : {"train.jsonl", "test.jsonl", "model.ckpt", "train_log.csv", "metrics.csv"}) {
    const bool eq = slurp(root / "run1" / f) == slurp(root / "run2" / f) && !slurp(root / "run1" / f).empty();
    o.notes.push_back(std::string(f) + (eq ? " identical across runs" : " DIFFERS across runs"));
    same = same && eq;
  }
  const bool threads_eq = slurp(root / "run1" / "metrics.csv") == slurp(fs::path(n_dir) / "metrics.csv");
  o.notes.push_back(std::string("metrics.csv ") + (threads_eq ? "identical" : "DIFFERS") + " for 1 vs 4 threads");
  o.pass = same && threads_eq;
  o.detail = "gen-data/train/eval twice with seed 3: datasets, checkpoint and metric CSV byte-identical " +
             std::string(same ? "yes" : "no") + ", 1 vs 4 eval threads identical " + (threads_eq ? "yes" : "no");
  return o;
}

Outcome criterion_geometry(const Context&) {
  KeyedRng rng(derive_key(8, {1}));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Box7 b{rng.uniform(-60, 60), rng.uniform(-60, 60), 0.0, rng.uniform(0.3, 3.5),
           rng.uniform(0.5, 15.0), 1.5, normalize_heading(rng.uniform(-4.0, 4.0))};
    const Box7 r = vertices_to_box(box_to_vertices(b));
    worst = std::max({worst, std::abs(r.x - b.x), std::abs(r.y - b.y), std::abs(r.width - b.width),
                      std::abs(r.length - b.length), std::abs(normalize_heading(r.heading - b.heading))});
  }
  const bool ex1 = box_to_vertices({0, 0, 0, 2, 4, 1, 0}).points ==
                   std::vector<Point2>{{2, 1}, {2, -1}, {-2, -1}, {-2, 1}, {0, 0}};
  const bool ex2 = box_to_vertices({1, 1, 0, 2, 4, 1, std::numbers::pi / 2}).points ==
                   std::vector<Point2>{{0, 3}, {2, 3}, {2, -1}, {0, -1}, {1, 1}};
  Outcome o;
  o.pass = worst < 1e-9 && ex1 && ex2;
  o.detail = "1000 random round trips max error " + fmt(worst, 3) + " (< 1e-09); rotation examples theta=0 " +
             (ex1 ? "exact" : "WRONG") + ", theta=pi/2 " + (ex2 ? "exact" : "WRONG");
  return o;
}

Outcome criterion_gate(const Context& ctx) {
  Outcome o;
  // Fresh model: the gate starts at exactly 0.5.
  RunConfig cfg = load_config(kConfigDir + "/default.cfg");
  PlannerModel fresh(cfg.model);
  fresh.init(0);
  bool half = true;
  for (const SceneSample& s : generate_scenes(cfg, 0, 0, 8)) {
    const ForwardState st = fresh.forward(make_inputs(s, cfg.model));
    for (double v : st.gate->signal.values.data()) half = half && v == 0.5;
  }

  // Contractivity and range on 10^4 random gates and inputs.
  KeyedRng rng(derive_key(9, {1}));
  bool contractive = true, in_range = true;
  for (int i = 0; i < 10000; ++i) {
    UncertaintyGate g("g", {16, 4, 8, i % 2 ? GateMode::kEgo : GateMode::kTemporal});
    g.init(rng());
    for (double& w : g.projection().weight().value.data()) w *= rng.uniform(0.0, 40.0);
    Matrix q(3, 16);
    for (double& v : q.data()) v = rng.uniform(-5.0, 5.0);
    const GateSignal sig = g.gate(g.pool_context(q).context.c).signal;
    for (double v : sig.values.data()) in_range = in_range && v > 0.0 && v < 1.0;
    if (sig.mode == GateMode::kEgo) {
      EgoStatusMatrix s{Matrix(8, 4), default_ego_feature_names()};
      for (double& v : s.values.data()) v = rng.uniform(-100.0, 100.0);
      contractive = contractive && max_abs(apply_ego_gate(sig, s).values) <= max_abs(s.values);
    } else {
      TemporalQueryTensor t(5, 4, 16);
      for (double& v : t.values) v = rng.uniform(-100.0, 100.0);
      const TemporalQueryTensor out = apply_temporal_gate(sig, t);
      double a = 0.0, b = 0.0;
      for (double v : t.values) a = std::max(a, std::abs(v));
      for (double v : out.values) b = std::max(b, std::abs(v));
      contractive = contractive && b <= a;
    }
  }

  // gate-dump on a trained checkpoint.
  const fs::path dir = ctx.artifacts / "gates";
  fs::remove_all(dir);
  const std::string small = kConfigDir + "/small.cfg";
  bool dumped = cli({"train", "--config", small, "--out", dir.string()}) == 0 &&
                cli({"gate-dump", "--config", small, "--checkpoint", (dir / "model.ckpt").string(), "--out",
                     dir.string(), "--scenes", "complex,simple"}) == 0;
  for (const char* name : {"gate_complex.csv", "gate_simple.csv"}) {
    std::istringstream in(slurp(dir / name));
    std::string line;
    dumped = dumped && std::getline(in, line) && line == "feature,t,t-1,t-2,t-3";
    std::size_t row = 0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      dumped = dumped && row < 8 && cell == default_ego_feature_names()[row];
      std::size_t cols = 0;
      while (std::getline(ss, cell, ',')) {
        const double v = std::stod(cell);
        in_range = in_range && v > 0.0 && v < 1.0;
        ++cols;
      }
      dumped = dumped && cols == 4;
      ++row;
    }
    dumped = dumped && row == 8;
  }
  o.pass = half && in_range && contractive && dumped;
  o.detail = std::string("gate values in (0,1) ") + (in_range ? "yes" : "no") + ", zero-init gates exactly 0.5 " +
             (half ? "yes" : "no") + ", contractive on 10^4 random tensors " + (contractive ? "yes" : "no") +
             ", gate-dump 8x4 CSVs with ego feature labels " + (dumped ? "yes" : "no");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome(const Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ustack acceptance suite"};
  std::vector<int> only;
  Context ctx;
  std::string artifacts = "acceptance_artifacts";
  app.add_option("--only", only, "Criteria to run (default: all)")->check(CLI::Range(1, 9));
  app.add_option("--out", artifacts, "Directory for CSV artifacts");
  app.add_option("--threads", ctx.threads, "Evaluation threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  ctx.artifacts = artifacts;
  fs::create_directories(ctx.artifacts);

  const std::vector<Criterion> criteria{
      {1, "gradient suite", criterion_gradients},
      {2, "calibration recovery", criterion_calibration},
      {3, "coverage", criterion_coverage},
      {4, "directional L2", criterion_l2},
      {5, "directional EPDMS", criterion_epdms},
      {6, "overhead", criterion_overhead},
      {7, "determinism", criterion_determinism},
      {8, "geometry oracle", criterion_geometry},
      {9, "gate invariants", criterion_gate},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    for (const std::string& n : o.notes) std::cout << "    " << n << "\n";
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.title << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
