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
#include <string>
#include <vector>

#include "ustack/numeric/param.hpp"

namespace ustack {

// .ckpt layout:
//
//   USTACK-CKPT 1
//   tensors <N>
//   <name> <rows> <cols>      (N lines, declaration order)
//   data
//   <rows*cols little-endian float64 per tensor, same order>
//
// Names must not contain whitespace.
struct TensorManifestEntry {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  friend bool operator==(const TensorManifestEntry&, const TensorManifestEntry&) = default;
};

void write_checkpoint(std::ostream& out, const ParamList& params);
void write_checkpoint(const std::filesystem::path& path, const ParamList& params);

// Loads values into `params`; the manifest must match names and shapes exactly.
void read_checkpoint(std::istream& in, const ParamList& params);
void read_checkpoint(const std::filesystem::path& path, const ParamList& params);

std::vector<TensorManifestEntry> read_checkpoint_manifest(const std::filesystem::path& path);

}  // namespace ustack
