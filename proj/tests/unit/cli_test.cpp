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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ustack_cli/cli.hpp"

namespace fs = std::filesystem;
using ustack::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ustack_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

const std::string kSmall = USTACK_CONFIG_DIR "/small.cfg";

}  // namespace

TEST_CASE("usage errors exit 1 with usage text") {
  Result r = call({"train"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--config") != std::string::npos);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = call({"gradcheck", "--bogus"});
  CHECK(r.code == 1);
  CHECK(r.err.find("Usage") != std::string::npos);
  CHECK(call({}).code == 1);
  CHECK(call({"fly"}).code == 1);
  CHECK(call({"--help"}).code == 0);
}

TEST_CASE("invalid configuration exits 1") {
  const fs::path dir = scratch("badcfg");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.cfg") << "[model]\nwidth = 3\n";
  CHECK(call({"gen-data", "--config", (dir / "bad.cfg").string(), "--out", dir.string()}).code == 1);
  std::ofstream(dir / "invalid.cfg") << "[model]\nd_h = 10\n";
  CHECK(call({"gen-data", "--config", (dir / "invalid.cfg").string(), "--out", dir.string()}).code == 1);
  CHECK(call({"bench", "--iters", "10"}).code == 1);
}

TEST_CASE("gradcheck --seed 7 exits 0") {
  const Result r = call({"gradcheck", "--seed", "7"});
  CHECK(r.code == 0);
  CHECK(r.out.find("full_stack_ego_matrix") != std::string::npos);
}

TEST_CASE("gen-data twice gives identical files") {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  REQUIRE(call({"gen-data", "--config", kSmall, "--seed", "1", "--out", a.string()}).code == 0);
  REQUIRE(call({"gen-data", "--config", kSmall, "--seed", "1", "--out", b.string()}).code == 0);
  for (const char* f : {"train.jsonl", "test.jsonl", "run.cfg"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(!slurp(a / "train.jsonl").empty());
}

TEST_CASE("train, eval and a mismatched checkpoint") {
  const fs::path dir = scratch("train");
  REQUIRE(call({"train", "--config", kSmall, "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(fs::exists(dir / "train_log.csv"));
  const Result e = call({"eval", "--config", kSmall, "--out", dir.string()});
  REQUIRE(e.code == 0);
  CHECK(slurp(dir / "metrics.csv").rfind("metric,horizon,value\n", 0) == 0);
  CHECK(fs::exists(dir / "timing.csv"));

  const fs::path other = scratch("mismatch");
  fs::create_directories(other);
  std::ofstream(other / "wide.cfg") << "[model]\nquery_hidden = 48\nd_in = 16\nd_h = 16\nstatic_vertices = 8\n";
  const Result m = call({"eval", "--config", (other / "wide.cfg").string(), "--checkpoint",
                         (dir / "model.ckpt").string(), "--out", other.string()});
  CHECK(m.code == 1);
  const Result missing = call({"eval", "--config", kSmall, "--checkpoint", (other / "none.ckpt").string(),
                               "--out", other.string()});
  CHECK(missing.code == 2);
}

TEST_CASE("gate-dump writes labelled L x T heatmaps") {
  const fs::path dir = scratch("gates");
  REQUIRE(call({"gate-dump", "--config", kSmall, "--out", dir.string(), "--scenes", "complex,simple,3"}).code == 0);
  for (const char* name : {"gate_complex.csv", "gate_simple.csv", "gate_3.csv"}) {
    std::istringstream in(slurp(dir / name));
    std::string line;
    std::getline(in, line);
    CHECK(line == "feature,t,t-1,t-2,t-3");
    std::size_t rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 8);
  }
  CHECK(call({"gate-dump", "--config", kSmall, "--out", dir.string(), "--scenes", "busy"}).code == 1);
}
