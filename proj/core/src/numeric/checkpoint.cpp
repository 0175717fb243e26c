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

#include "ustack/numeric/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ustack/errors.hpp"

namespace ustack {
namespace {

constexpr const char* kMagic = "USTACK-CKPT";
constexpr int kVersion = 1;

void put_le_double(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

double get_le_double(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw DatasetError("checkpoint: truncated tensor data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::vector<TensorManifestEntry> read_manifest(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DatasetError("checkpoint: empty file");
  {
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != kMagic) throw DatasetError("checkpoint: bad magic '" + magic + "'");
    if (version != kVersion) {
      throw DatasetError("checkpoint: unsupported version " + std::to_string(version));
    }
  }
  std::size_t count = 0;
  {
    std::getline(in, line);
    std::istringstream ls(line);
    std::string key;
    ls >> key >> count;
    if (key != "tensors" || !ls) throw DatasetError("checkpoint: missing tensor count");
  }
  std::vector<TensorManifestEntry> entries(count);
  for (auto& e : entries) {
    if (!std::getline(in, line)) throw DatasetError("checkpoint: truncated manifest");
    std::istringstream ls(line);
    ls >> e.name >> e.rows >> e.cols;
    if (!ls) throw DatasetError("checkpoint: malformed manifest line '" + line + "'");
  }
  if (!std::getline(in, line) || line != "data") throw DatasetError("checkpoint: missing data marker");
  return entries;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamList& params) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "tensors " << params.size() << '\n';
  for (const ParamTensor* p : params) {
    out << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
  }
  out << "data\n";
  for (const ParamTensor* p : params)
    for (double v : p->value.data()) put_le_double(out, v);
}

void write_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(out, params);
  if (!out) throw DatasetError("checkpoint: write to " + path.string() + " failed");
}

void read_checkpoint(std::istream& in, const ParamList& params) {
  const auto manifest = read_manifest(in);
  if (manifest.size() != params.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(manifest.size()) +
                      " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamTensor& p = *params[i];
    const TensorManifestEntry want{p.name, p.value.rows(), p.value.cols()};
    if (!(manifest[i] == want)) {
      throw ConfigError("checkpoint tensor " + std::to_string(i) + " is " + manifest[i].name + " " +
                        std::to_string(manifest[i].rows) + "x" + std::to_string(manifest[i].cols) +
                        ", model expects " + want.name + " " + p.value.shape_string());
    }
  }
  for (ParamTensor* p : params)
    for (double& v : p->value.data()) v = get_le_double(in);
}

void read_checkpoint(const std::filesystem::path& path, const ParamList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("checkpoint: cannot open " + path.string());
  read_checkpoint(in, params);
}

std::vector<TensorManifestEntry> read_checkpoint_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("checkpoint: cannot open " + path.string());
  return read_manifest(in);
}

}  // namespace ustack
