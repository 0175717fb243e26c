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

#include "ustack/scene/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "ustack/errors.hpp"

namespace ustack {

namespace {

using nlohmann::json;

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DatasetError("point must be a 2-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json points_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const Point2& p : pts) a.push_back(point_json(p));
  return a;
}

std::vector<Point2> points_from(const json& j) {
  std::vector<Point2> out;
  for (const json& p : j) out.push_back(point_from(p));
  return out;
}

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols) throw DatasetError("matrix data length does not match rows*cols");
  return Matrix(rows, cols, std::move(data));
}

json vertex_sets_json(const std::vector<VertexSet>& sets) {
  json a = json::array();
  for (const VertexSet& s : sets) {
    a.push_back(json{{"kind", to_string(s.kind)}, {"points", points_json(s.points)}});
  }
  return a;
}

std::vector<VertexSet> vertex_sets_from(const json& j) {
  std::vector<VertexSet> out;
  for (const json& s : j) {
    VertexSet v;
    const auto kind = s.at("kind").get<std::string>();
    if (kind == to_string(ElementKind::kStatic)) v.kind = ElementKind::kStatic;
    else if (kind == to_string(ElementKind::kDynamic)) v.kind = ElementKind::kDynamic;
    else throw DatasetError("unknown element kind '" + kind + "'");
    v.points = points_from(s.at("points"));
    out.push_back(std::move(v));
  }
  return out;
}

json scales_json(const std::vector<std::vector<AxisScales>>& scales) {
  json a = json::array();
  for (const auto& elem : scales) {
    json e = json::array();
    for (const AxisScales& s : elem) e.push_back(json::array({s[0], s[1]}));
    a.push_back(std::move(e));
  }
  return a;
}

std::vector<std::vector<AxisScales>> scales_from(const json& j) {
  std::vector<std::vector<AxisScales>> out;
  for (const json& e : j) {
    std::vector<AxisScales> elem;
    for (const json& s : e) {
      const Point2 p = point_from(s);
      elem.push_back({p.x, p.y});
    }
    out.push_back(std::move(elem));
  }
  return out;
}

json box_json(const Box7& b) {
  return json::array({b.x, b.y, b.z, b.width, b.length, b.height, b.heading});
}

Box7 box_from(const json& j) {
  if (!j.is_array() || j.size() != 7) throw DatasetError("box must be a 7-element array");
  return Box7{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>(),
              j[4].get<double>(), j[5].get<double>(), j[6].get<double>()};
}

const char* complexity_name(Complexity c) { return c == Complexity::kComplex ? "complex" : "simple"; }

}  // namespace

std::string serialize_scene(const SceneSample& s) {
  json j;
  j["seed"] = s.seed;
  j["index"] = s.index;
  j["dt"] = s.dt;
  j["history_steps"] = s.history_steps;
  j["future_steps"] = s.future_steps;
  j["curvature"] = s.curvature;
  j["ego_lane"] = s.ego_lane;
  j["complexity"] = complexity_name(s.complexity);
  json map = json::array();
  for (const Polyline& pl : s.map_elements) map.push_back(points_json(pl.points));
  j["map_elements"] = std::move(map);
  json agents = json::array();
  for (const auto& step : s.agents) {
    json a = json::array();
    for (const AgentState& st : step) a.push_back(json{{"box", box_json(st.box)}, {"v", {st.vx, st.vy}}});
    agents.push_back(std::move(a));
  }
  j["agents"] = std::move(agents);
  j["ego_history"] = json{{"features", s.ego_history.feature_names},
                          {"values", matrix_json(s.ego_history.values)}};
  j["ego_future"] = matrix_json(s.ego_future);
  j["observed"] = s.observed;
  j["static_vertices"] = s.static_vertices;
  j["observed_static"] = vertex_sets_json(s.observed_static);
  j["observed_dynamic"] = vertex_sets_json(s.observed_dynamic);
  j["true_scales_static"] = scales_json(s.true_scales_static);
  j["true_scales_dynamic"] = scales_json(s.true_scales_dynamic);
  j["occluded_dynamic"] = s.occluded_dynamic;
  j["input_features_static"] = matrix_json(s.input_features_static);
  j["input_features_dynamic"] = matrix_json(s.input_features_dynamic);
  return j.dump();
}

SceneSample parse_scene(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DatasetError(std::string("malformed JSON: ") + e.what());
  }
  try {
    SceneSample s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.index = j.at("index").get<std::size_t>();
    s.dt = j.at("dt").get<double>();
    s.history_steps = j.at("history_steps").get<std::size_t>();
    s.future_steps = j.at("future_steps").get<std::size_t>();
    s.curvature = j.at("curvature").get<double>();
    s.ego_lane = j.at("ego_lane").get<std::size_t>();
    const auto cx = j.at("complexity").get<std::string>();
    if (cx == "complex") s.complexity = Complexity::kComplex;
    else if (cx == "simple") s.complexity = Complexity::kSimple;
    else throw DatasetError("unknown complexity '" + cx + "'");
    for (const json& pl : j.at("map_elements")) s.map_elements.push_back(Polyline{points_from(pl)});
    for (const json& step : j.at("agents")) {
      std::vector<AgentState> states;
      for (const json& a : step) {
        const Point2 v = point_from(a.at("v"));
        states.push_back(AgentState{box_from(a.at("box")), v.x, v.y});
      }
      s.agents.push_back(std::move(states));
    }
    s.ego_history.feature_names = j.at("ego_history").at("features").get<std::vector<std::string>>();
    s.ego_history.values = matrix_from(j.at("ego_history").at("values"));
    s.ego_future = matrix_from(j.at("ego_future"));
    s.observed = j.at("observed").get<bool>();
    s.static_vertices = j.at("static_vertices").get<std::size_t>();
    s.observed_static = vertex_sets_from(j.at("observed_static"));
    s.observed_dynamic = vertex_sets_from(j.at("observed_dynamic"));
    s.true_scales_static = scales_from(j.at("true_scales_static"));
    s.true_scales_dynamic = scales_from(j.at("true_scales_dynamic"));
    s.occluded_dynamic = j.at("occluded_dynamic").get<std::vector<std::vector<std::uint8_t>>>();
    s.input_features_static = matrix_from(j.at("input_features_static"));
    s.input_features_dynamic = matrix_from(j.at("input_features_dynamic"));
    return s;
  } catch (const json::exception& e) {
    throw DatasetError(std::string("bad record: ") + e.what());
  }
}

void write_dataset(const std::vector<SceneSample>& samples, std::ostream& out) {
  out << json{{"schema", kDatasetSchema}}.dump() << '\n';
  for (const SceneSample& s : samples) out << serialize_scene(s) << '\n';
  if (!out) throw DatasetError("write_dataset: stream write failed");
}

void write_dataset(const std::vector<SceneSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("write_dataset: cannot open " + path.string());
  write_dataset(samples, out);
}

std::vector<SceneSample> read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("line 1: missing schema header");
  try {
    const json header = json::parse(line);
    if (header.at("schema").get<int>() != kDatasetSchema) {
      throw DatasetError("line 1: schema mismatch, expected " + std::to_string(kDatasetSchema) +
                         ", got " + header.at("schema").dump());
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("line 1: bad schema header: ") + e.what());
  }
  std::vector<SceneSample> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(parse_scene(line));
    } catch (const DatasetError& e) {
      throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<SceneSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("read_dataset: cannot open " + path.string());
  return read_dataset(in);
}

}  // namespace ustack
