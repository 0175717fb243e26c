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

#include "ustack_cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "ustack/errors.hpp"
#include "ustack/harness/bench.hpp"
#include "ustack/harness/calibration.hpp"
#include "ustack/harness/config.hpp"
#include "ustack/harness/gradcheck_suite.hpp"
#include "ustack/harness/metrics.hpp"
#include "ustack/harness/model.hpp"
#include "ustack/harness/pipeline.hpp"
#include "ustack/numeric/checkpoint.hpp"
#include "ustack/scene/dataset.hpp"

namespace ustack::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t threads = 1;
};

RunConfig load(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

fs::path prepare_out(const CommonOptions& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void save_config(const fs::path& dir, const RunConfig& cfg) {
  auto f = open_out(dir / "run.cfg");
  write_config(f, cfg);
}

void add_common(CLI::App* sub, CommonOptions& o, bool config_required) {
  auto* c = sub->add_option("--config", o.config, "Config file ([model] [train] [data] [noise] [epdms])");
  if (config_required) c->required();
  c->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Seed; overrides [train] seed");
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
}

std::vector<SceneSample> train_split(const RunConfig& cfg, const std::string& data_dir, std::size_t threads) {
  if (!data_dir.empty()) return read_dataset(fs::path(data_dir) / "train.jsonl");
  return generate_scenes(cfg, cfg.seed, 0, cfg.data.n_train, threads);
}

std::vector<SceneSample> test_split(const RunConfig& cfg, const std::string& data_dir, std::size_t threads) {
  if (!data_dir.empty()) return read_dataset(fs::path(data_dir) / "test.jsonl");
  return generate_scenes(cfg, cfg.seed, cfg.data.n_train, cfg.data.n_test, threads);
}

void write_parameter_counts(std::ostream& out, const ModuleParameterCounts& c) {
  out << "module,parameters\n"
      << "query_encoders," << c.query_encoders << "\n"
      << "heads," << c.heads << "\n"
      << "fusion_static," << c.fusion_static << "\n"
      << "fusion_dynamic," << c.fusion_dynamic << "\n"
      << "gate," << c.gate << "\n"
      << "planner," << c.planner << "\n"
      << "total," << c.total() << "\n";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoull(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("bad seed list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("seed list is empty");
  return out;
}

// A named scene is "complex", "simple", or the index of a test-split scene.
SceneSample named_scene(const RunConfig& cfg, const std::string& name) {
  if (name == "complex" || name == "simple") {
    RunConfig c = cfg;
    c.data.complexity = name == "complex" ? Complexity::kComplex : Complexity::kSimple;
    return generate_scenes(c, cfg.seed, 0, 1).front();
  }
  std::size_t pos = 0;
  std::size_t index = 0;
  try {
    index = std::stoull(name, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != name.size()) {
    throw ValidationError("scene name must be 'complex', 'simple' or an index, got '" + name + "'");
  }
  return generate_scenes(cfg, cfg.seed, index, 1).front();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ustack: uncertainty-aware planning stack on synthetic BEV scenes", "ustack"};
  app.require_subcommand(1);

  CommonOptions gen_o, train_o, eval_o, calib_o, grad_o, bench_o, gate_o;

  auto* gen = app.add_subcommand("gen-data", "Generate train.jsonl and test.jsonl");
  add_common(gen, gen_o, true);
  gen->add_option("--threads", gen_o.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string train_data;
  auto* train = app.add_subcommand("train", "Two-stage training; writes model.ckpt and train_log.csv");
  add_common(train, train_o, true);
  train->add_option("--data", train_data, "Directory with train.jsonl (generated in memory if omitted)");

  std::string eval_data;
  std::string eval_ckpt;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint; writes metrics.csv and timing.csv");
  add_common(eval, eval_o, true);
  eval->add_option("--data", eval_data, "Directory with test.jsonl (generated in memory if omitted)");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint (default <out>/model.ckpt)");
  eval->add_option("--threads", eval_o.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::string calib_seeds = "0,1,2";
  auto* calib = app.add_subcommand("calibrate", "Scale recovery and coverage of the Laplace heads");
  add_common(calib, calib_o, false);
  calib->add_option("--seeds", calib_seeds, "Comma-separated seeds (ignored when --seed is given)");
  calib->add_option("--threads", calib_o.threads, "Worker threads for data generation")
      ->check(CLI::PositiveNumber);

  std::size_t grad_seeds = 10;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every backward pass");
  add_common(grad, grad_o, false);
  grad->add_option("--seeds", grad_seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);

  std::size_t bench_iters = 1000;
  std::size_t bench_reps = 5;
  bool bench_self = false;
  auto* bench = app.add_subcommand("bench", "Forward-pass overhead of the uncertainty modules");
  add_common(bench, bench_o, false);
  bench->add_option("--iters", bench_iters, "Forward passes per arm and repetition (>= 100)");
  bench->add_option("--reps", bench_reps, "Repetitions")->check(CLI::PositiveNumber);
  bench->add_flag("--self-compare", bench_self, "Switch uncertainty modules off in both arms");

  std::string gate_ckpt;
  std::vector<std::string> gate_scenes{"complex", "simple"};
  auto* gate = app.add_subcommand("gate-dump", "Write gate heatmap CSVs for named scenes");
  add_common(gate, gate_o, false);
  gate->add_option("--checkpoint", gate_ckpt, "Checkpoint (fresh initialization if omitted)");
  gate->add_option("--scenes", gate_scenes, "Scene names: complex, simple, or test-split indices")
      ->delimiter(',');

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (const CLI::App* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return kExitValidation;
  }

  try {
    if (*gen) {
      const RunConfig cfg = load(gen_o);
      const fs::path dir = prepare_out(gen_o);
      const DatasetSplits d = generate_dataset(cfg, gen_o.threads);
      write_dataset(d.train, dir / "train.jsonl");
      write_dataset(d.test, dir / "test.jsonl");
      save_config(dir, cfg);
      out << "wrote " << d.train.size() << " train and " << d.test.size() << " test scenes to " << dir.string()
          << "\n";
    } else if (*train) {
      const RunConfig cfg = load(train_o);
      const fs::path dir = prepare_out(train_o);
      const auto data = train_split(cfg, train_data, 1);
      PlannerModel model(cfg.model);
      model.init(cfg.seed);
      const auto log = train_model(model, data, cfg, &err);
      write_checkpoint(dir / "model.ckpt", model.parameters());
      auto log_file = open_out(dir / "train_log.csv");
      write_train_log(log_file, log);
      auto counts = open_out(dir / "parameters.csv");
      write_parameter_counts(counts, model.parameter_counts());
      save_config(dir, cfg);
      out << "trained on " << data.size() << " scenes; checkpoint " << (dir / "model.ckpt").string() << "\n";
    } else if (*eval) {
      const RunConfig cfg = load(eval_o);
      const fs::path dir = prepare_out(eval_o);
      const auto data = test_split(cfg, eval_data, eval_o.threads);
      PlannerModel model(cfg.model);
      read_checkpoint(eval_ckpt.empty() ? dir / "model.ckpt" : fs::path(eval_ckpt), model.parameters());
      const MetricsReport report = evaluate_model(model, data, cfg, eval_o.threads);
      write_metrics_csv(dir / "metrics.csv", report.rows());
      auto timing = open_out(dir / "timing.csv");
      timing << "quantity,value\nwall_time_per_forward," << format_double(report.wall_time_per_forward) << "\n";
      write_metrics_csv(out, report.rows());
    } else if (*calib) {
      const RunConfig cfg = load(calib_o);
      const fs::path dir = prepare_out(calib_o);
      const auto seeds = calib_o.seed ? std::vector<std::uint64_t>{*calib_o.seed} : parse_seed_list(calib_seeds);
      std::vector<CalibrationReport> reports;
      for (std::uint64_t s : seeds) reports.push_back(run_calibration(cfg, s, {0.1, 0.3, 1.0}, calib_o.threads));
      auto f = open_out(dir / "calibration.csv");
      write_calibration_csv(f, reports);
      write_calibration_csv(out, reports);
    } else if (*grad) {
      const GradSuiteResult r = run_gradient_suite(grad_o.seed.value_or(0), grad_seeds);
      if (grad_o.out != ".") {
        auto f = open_out(prepare_out(grad_o) / "gradcheck.csv");
        write_gradient_report(f, r);
      }
      write_gradient_report(out, r);
      if (!r.passed()) {
        err << "gradcheck: at least one check exceeded relative error " << r.tolerance << "\n";
        return kExitRuntime;
      }
    } else if (*bench) {
      const RunConfig cfg = load(bench_o);
      const BenchReport r = run_bench(cfg, bench_iters, bench_reps, bench_self);
      auto f = open_out(prepare_out(bench_o) / "bench.csv");
      write_bench_csv(f, r);
      write_bench_csv(out, r);
    } else if (*gate) {
      const RunConfig cfg = load(gate_o);
      if (!cfg.model.use_gate) throw ValidationError("gate-dump: model.use_gate is false");
      PlannerModel model(cfg.model);
      model.init(cfg.seed);
      if (!gate_ckpt.empty()) read_checkpoint(gate_ckpt, model.parameters());
      const fs::path dir = prepare_out(gate_o);
      for (const std::string& name : gate_scenes) {
        const SceneSample s = named_scene(cfg, name);
        const ForwardState st = model.forward(make_inputs(s, cfg.model));
        const std::vector<std::string> labels = cfg.model.history_mode == HistoryMode::kEgoMatrix
                                                    ? s.ego_history.feature_names
                                                    : std::vector<std::string>{"temporal"};
        const fs::path path = dir / ("gate_" + name + ".csv");
        auto f = open_out(path);
        write_gate_csv(f, st.gate->signal, labels);
        out << "wrote " << path.string() << "\n";
      }
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ustack::cli
