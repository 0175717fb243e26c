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

#include "ustack/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "ustack/errors.hpp"

namespace ustack {

void PlannerConfig::validate() const {
  if (d_in == 0 || d_h == 0) throw ValidationError("model: d_in and d_h must be positive");
  if (n_heads == 0 || d_h % n_heads != 0) {
    throw ValidationError("model: n_heads must divide d_h (d_h=" + std::to_string(d_h) +
                          ", n_heads=" + std::to_string(n_heads) + ")");
  }
  if (future_steps < 1) throw ValidationError("model: future_steps must be >= 1");
  if (history_steps < 1) throw ValidationError("model: history_steps must be >= 1");
  if (static_vertices < 2) throw ValidationError("model: static_vertices must be >= 2");
  if (temporal_slots < 1) throw ValidationError("model: temporal_slots must be >= 1");
  if (!(fusion_position_scale > 0.0)) throw ValidationError("model: fusion_position_scale must be positive");
  for (auto v : {&query_hidden, &head_hidden, &fusion_hidden, &planner_hidden}) {
    for (std::size_t s : *v) {
      if (s == 0) throw ValidationError("model: hidden layer sizes must be positive");
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ValidationError("train: learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("train: momentum must be in [0, 1)");
  if (batch_size == 0) throw ValidationError("train: batch_size must be >= 1");
  if (!(w_plan >= 0.0)) throw ValidationError("train: w_plan must be >= 0");
  if (!(clip_norm > 0.0)) throw ValidationError("train: clip_norm must be positive");
  static_weights.validate();
  dynamic_weights.validate();
}

void DataConfig::validate() const {
  if (n_lanes == 0) throw ValidationError("data: n_lanes must be >= 1");
  if (!(dt > 0.0)) throw ValidationError("data: dt must be positive");
  if (!(curved_fraction >= 0.0 && curved_fraction <= 1.0)) {
    throw ValidationError("data: curved_fraction must be in [0, 1]");
  }
}

void EpdmsConfig::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ValidationError("epdms: weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError("epdms: weights must not all be zero");
  if (!(ego_radius >= 0.0)) throw ValidationError("epdms: ego_radius must be >= 0");
  if (!(lane_keeping_tolerance > 0.0)) throw ValidationError("epdms: lane_keeping_tolerance must be positive");
  if (!(ttc_horizon > 0.0)) throw ValidationError("epdms: ttc_horizon must be positive");
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  data.validate();
  noise.validate();
  epdms.validate();
  if (data.duration_steps < model.history_steps + model.future_steps) {
    throw ValidationError("data.duration_steps must cover model.history_steps + model.future_steps");
  }
}

SceneSpec RunConfig::scene_spec(std::uint64_t scene_seed_value) const {
  SceneSpec s;
  s.n_lanes = data.n_lanes;
  s.n_agents = data.n_agents;
  s.history_steps = model.history_steps;
  s.future_steps = model.future_steps;
  s.duration_steps = data.duration_steps;
  s.dt = data.dt;
  s.complexity = data.complexity;
  s.curved_fraction = data.curved_fraction;
  s.static_vertices = model.static_vertices;
  s.seed = scene_seed_value;
  return s;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v) {
  std::uint64_t out = 0;
  int base = 10;
  std::string_view sv = v;
  if (sv.starts_with("0x") || sv.starts_with("0X")) {
    sv.remove_prefix(2);
    base = 16;
  }
  const auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), out, base);
  if (ec != std::errc() || p != sv.data() + sv.size() || sv.empty()) {
    throw ConfigError("expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("expected a boolean, got '" + v + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& v) {
  std::vector<std::size_t> out;
  if (v.empty() || v == "none") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_u64(trim(item)));
  return out;
}

std::string sizes_string(const std::vector<std::size_t>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string num(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.d_in", [](RunConfig& c, const std::string& v) { c.model.d_in = parse_u64(v); }},
      {"model.d_h", [](RunConfig& c, const std::string& v) { c.model.d_h = parse_u64(v); }},
      {"model.query_hidden", [](RunConfig& c, const std::string& v) { c.model.query_hidden = parse_sizes(v); }},
      {"model.head_hidden", [](RunConfig& c, const std::string& v) { c.model.head_hidden = parse_sizes(v); }},
      {"model.fusion_hidden", [](RunConfig& c, const std::string& v) { c.model.fusion_hidden = parse_sizes(v); }},
      {"model.planner_hidden", [](RunConfig& c, const std::string& v) { c.model.planner_hidden = parse_sizes(v); }},
      {"model.n_heads", [](RunConfig& c, const std::string& v) { c.model.n_heads = parse_u64(v); }},
      {"model.static_vertices", [](RunConfig& c, const std::string& v) { c.model.static_vertices = parse_u64(v); }},
      {"model.history_steps", [](RunConfig& c, const std::string& v) { c.model.history_steps = parse_u64(v); }},
      {"model.future_steps", [](RunConfig& c, const std::string& v) { c.model.future_steps = parse_u64(v); }},
      {"model.temporal_slots", [](RunConfig& c, const std::string& v) { c.model.temporal_slots = parse_u64(v); }},
      {"model.history_mode",
       [](RunConfig& c, const std::string& v) {
         if (v == "ego_matrix") c.model.history_mode = HistoryMode::kEgoMatrix;
         else if (v == "temporal_vector") c.model.history_mode = HistoryMode::kTemporalVector;
         else throw ConfigError("history_mode must be ego_matrix or temporal_vector, got '" + v + "'");
       }},
      {"model.use_static_uncer", [](RunConfig& c, const std::string& v) { c.model.use_static_uncer = parse_bool(v); }},
      {"model.use_dynamic_uncer", [](RunConfig& c, const std::string& v) { c.model.use_dynamic_uncer = parse_bool(v); }},
      {"model.use_gate", [](RunConfig& c, const std::string& v) { c.model.use_gate = parse_bool(v); }},
      {"model.residual_fusion", [](RunConfig& c, const std::string& v) { c.model.residual_fusion = parse_bool(v); }},
      {"model.fusion_position_scale",
       [](RunConfig& c, const std::string& v) { c.model.fusion_position_scale = parse_double(v); }},
      {"model.anchor_heads", [](RunConfig& c, const std::string& v) { c.model.anchor_heads = parse_bool(v); }},
      {"model.detach_heads", [](RunConfig& c, const std::string& v) { c.model.detach_heads = parse_bool(v); }},
      {"train.epochs_stage1", [](RunConfig& c, const std::string& v) { c.train.epochs_stage1 = parse_u64(v); }},
      {"train.epochs_stage2", [](RunConfig& c, const std::string& v) { c.train.epochs_stage2 = parse_u64(v); }},
      {"train.learning_rate", [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_double(v); }},
      {"train.momentum", [](RunConfig& c, const std::string& v) { c.train.momentum = parse_double(v); }},
      {"train.batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_u64(v); }},
      {"train.w_plan", [](RunConfig& c, const std::string& v) { c.train.w_plan = parse_double(v); }},
      {"train.clip_norm", [](RunConfig& c, const std::string& v) { c.train.clip_norm = parse_double(v); }},
      {"train.static_w1", [](RunConfig& c, const std::string& v) { c.train.static_weights.w1 = parse_double(v); }},
      {"train.static_w2", [](RunConfig& c, const std::string& v) { c.train.static_weights.w2 = parse_double(v); }},
      {"train.dynamic_w1", [](RunConfig& c, const std::string& v) { c.train.dynamic_weights.w1 = parse_double(v); }},
      {"train.dynamic_w2", [](RunConfig& c, const std::string& v) { c.train.dynamic_weights.w2 = parse_double(v); }},
      {"train.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
      {"data.n_train", [](RunConfig& c, const std::string& v) { c.data.n_train = parse_u64(v); }},
      {"data.n_test", [](RunConfig& c, const std::string& v) { c.data.n_test = parse_u64(v); }},
      {"data.n_lanes", [](RunConfig& c, const std::string& v) { c.data.n_lanes = parse_u64(v); }},
      {"data.n_agents", [](RunConfig& c, const std::string& v) { c.data.n_agents = parse_u64(v); }},
      {"data.duration_steps", [](RunConfig& c, const std::string& v) { c.data.duration_steps = parse_u64(v); }},
      {"data.dt", [](RunConfig& c, const std::string& v) { c.data.dt = parse_double(v); }},
      {"data.complexity",
       [](RunConfig& c, const std::string& v) {
         if (v == "complex") c.data.complexity = Complexity::kComplex;
         else if (v == "simple") c.data.complexity = Complexity::kSimple;
         else throw ConfigError("complexity must be simple or complex, got '" + v + "'");
       }},
      {"data.curved_fraction", [](RunConfig& c, const std::string& v) { c.data.curved_fraction = parse_double(v); }},
      {"data.encoder_key", [](RunConfig& c, const std::string& v) { c.data.encoder_key = parse_u64(v); }},
      {"noise.b0", [](RunConfig& c, const std::string& v) { c.noise.b0 = parse_double(v); }},
      {"noise.b_dist", [](RunConfig& c, const std::string& v) { c.noise.b_dist = parse_double(v); }},
      {"noise.b_occl", [](RunConfig& c, const std::string& v) { c.noise.b_occl = parse_double(v); }},
      {"noise.family",
       [](RunConfig& c, const std::string& v) {
         if (v == "laplace") c.noise.family = NoiseFamily::kLaplace;
         else if (v == "gaussian") c.noise.family = NoiseFamily::kGaussian;
         else throw ConfigError("noise family must be laplace or gaussian, got '" + v + "'");
       }},
      {"epdms.w_ttc", [](RunConfig& c, const std::string& v) { c.epdms.weights[0] = parse_double(v); }},
      {"epdms.w_ep", [](RunConfig& c, const std::string& v) { c.epdms.weights[1] = parse_double(v); }},
      {"epdms.w_hc", [](RunConfig& c, const std::string& v) { c.epdms.weights[2] = parse_double(v); }},
      {"epdms.w_lk", [](RunConfig& c, const std::string& v) { c.epdms.weights[3] = parse_double(v); }},
      {"epdms.w_ec", [](RunConfig& c, const std::string& v) { c.epdms.weights[4] = parse_double(v); }},
      {"epdms.ego_radius", [](RunConfig& c, const std::string& v) { c.epdms.ego_radius = parse_double(v); }},
      {"epdms.lane_keeping_tolerance",
       [](RunConfig& c, const std::string& v) { c.epdms.lane_keeping_tolerance = parse_double(v); }},
      {"epdms.ttc_horizon", [](RunConfig& c, const std::string& v) { c.epdms.ttc_horizon = parse_double(v); }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "model" && section != "train" && section != "data" && section != "noise" &&
          section != "epdms") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& c) {
  const auto b = [](bool v) { return v ? "true" : "false"; };
  out << "[model]\n"
      << "d_in = " << c.model.d_in << "\n"
      << "d_h = " << c.model.d_h << "\n"
      << "query_hidden = " << sizes_string(c.model.query_hidden) << "\n"
      << "head_hidden = " << sizes_string(c.model.head_hidden) << "\n"
      << "fusion_hidden = " << sizes_string(c.model.fusion_hidden) << "\n"
      << "planner_hidden = " << sizes_string(c.model.planner_hidden) << "\n"
      << "n_heads = " << c.model.n_heads << "\n"
      << "static_vertices = " << c.model.static_vertices << "\n"
      << "history_steps = " << c.model.history_steps << "\n"
      << "future_steps = " << c.model.future_steps << "\n"
      << "temporal_slots = " << c.model.temporal_slots << "\n"
      << "history_mode = "
      << (c.model.history_mode == HistoryMode::kEgoMatrix ? "ego_matrix" : "temporal_vector") << "\n"
      << "use_static_uncer = " << b(c.model.use_static_uncer) << "\n"
      << "use_dynamic_uncer = " << b(c.model.use_dynamic_uncer) << "\n"
      << "use_gate = " << b(c.model.use_gate) << "\n"
      << "residual_fusion = " << b(c.model.residual_fusion) << "\n"
      << "fusion_position_scale = " << num(c.model.fusion_position_scale) << "\n"
      << "anchor_heads = " << b(c.model.anchor_heads) << "\n"
      << "detach_heads = " << b(c.model.detach_heads) << "\n\n"
      << "[train]\n"
      << "seed = " << c.seed << "\n"
      << "epochs_stage1 = " << c.train.epochs_stage1 << "\n"
      << "epochs_stage2 = " << c.train.epochs_stage2 << "\n"
      << "learning_rate = " << num(c.train.learning_rate) << "\n"
      << "momentum = " << num(c.train.momentum) << "\n"
      << "batch_size = " << c.train.batch_size << "\n"
      << "w_plan = " << num(c.train.w_plan) << "\n"
      << "clip_norm = " << num(c.train.clip_norm) << "\n"
      << "static_w1 = " << num(c.train.static_weights.w1) << "\n"
      << "static_w2 = " << num(c.train.static_weights.w2) << "\n"
      << "dynamic_w1 = " << num(c.train.dynamic_weights.w1) << "\n"
      << "dynamic_w2 = " << num(c.train.dynamic_weights.w2) << "\n\n"
      << "[data]\n"
      << "n_train = " << c.data.n_train << "\n"
      << "n_test = " << c.data.n_test << "\n"
      << "n_lanes = " << c.data.n_lanes << "\n"
      << "n_agents = " << c.data.n_agents << "\n"
      << "duration_steps = " << c.data.duration_steps << "\n"
      << "dt = " << num(c.data.dt) << "\n"
      << "complexity = " << (c.data.complexity == Complexity::kComplex ? "complex" : "simple") << "\n"
      << "curved_fraction = " << num(c.data.curved_fraction) << "\n"
      << "encoder_key = " << c.data.encoder_key << "\n\n"
      << "[noise]\n"
      << "b0 = " << num(c.noise.b0) << "\n"
      << "b_dist = " << num(c.noise.b_dist) << "\n"
      << "b_occl = " << num(c.noise.b_occl) << "\n"
      << "family = " << (c.noise.family == NoiseFamily::kLaplace ? "laplace" : "gaussian") << "\n\n"
      << "[epdms]\n"
      << "w_ttc = " << num(c.epdms.weights[0]) << "\n"
      << "w_ep = " << num(c.epdms.weights[1]) << "\n"
      << "w_hc = " << num(c.epdms.weights[2]) << "\n"
      << "w_lk = " << num(c.epdms.weights[3]) << "\n"
      << "w_ec = " << num(c.epdms.weights[4]) << "\n"
      << "ego_radius = " << num(c.epdms.ego_radius) << "\n"
      << "lane_keeping_tolerance = " << num(c.epdms.lane_keeping_tolerance) << "\n"
      << "ttc_horizon = " << num(c.epdms.ttc_horizon) << "\n";
}

}  // namespace ustack
