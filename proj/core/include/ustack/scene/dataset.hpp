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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ustack/scene/scene.hpp"

namespace ustack {

inline constexpr int kDatasetSchema = 1;

// One scene per line after a {"schema":1} header line. Reading throws
// DatasetError naming the 1-based line number of the first bad record.
void write_dataset(const std::vector<SceneSample>& samples, std::ostream& out);
void write_dataset(const std::vector<SceneSample>& samples, const std::filesystem::path& path);
std::vector<SceneSample> read_dataset(std::istream& in);
std::vector<SceneSample> read_dataset(const std::filesystem::path& path);

// Single-record codec, exposed for tests.
std::string serialize_scene(const SceneSample& sample);
SceneSample parse_scene(const std::string& line);

}  // namespace ustack
