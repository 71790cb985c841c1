// Copyright 2026 the modalign authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modalign/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "modalign/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; big-endian hosts need byte swaps");

namespace modalign {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'L', 'N', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in, const std::string& path) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("checkpoint: truncated file: " + path);
  return v;
}

uint64_t read_u64(std::istream& in, const std::string& path) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw IoError("checkpoint: truncated file: " + path);
  return v;
}

// Validates magic and version, returns the stored config hash with the
// stream positioned at the parameter count.
uint64_t read_header(std::istream& in, const std::string& path) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw IoError("checkpoint: unsupported format version " + std::to_string(version) + " in " +
                  path);
  return read_u64(in, path);
}

}  // namespace

void save_checkpoint(const std::string& path, uint64_t config_hash, const ParamList& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, config_hash);
  write_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    const std::vector<int>& shape = tensor.shape();
    write_u32(out, static_cast<uint32_t>(shape.size()));
    for (int d : shape) write_u32(out, static_cast<uint32_t>(d));
    out.write(reinterpret_cast<const char*>(tensor.values().data()),
              static_cast<std::streamsize>(tensor.values().size() * sizeof(double)));
  }
  if (!out) throw IoError("checkpoint: write failed: " + path);
}

void load_checkpoint(const std::string& path, uint64_t config_hash, const ParamList& params,
                     bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot read " + path);
  const uint64_t stored = read_header(in, path);
  if (stored != config_hash && !force)
    throw IoError("checkpoint: config hash mismatch in " + path +
                  " (pass force to load anyway)");

  const uint32_t count = read_u32(in, path);
  if (count != params.size())
    throw IoError("checkpoint: " + path + " holds " + std::to_string(count) +
                  " parameters, registry expects " + std::to_string(params.size()));
  for (const auto& [name, tensor] : params) {
    const uint32_t name_len = read_u32(in, path);
    std::string stored_name(name_len, '\0');
    in.read(stored_name.data(), name_len);
    if (!in || stored_name != name)
      throw IoError("checkpoint: parameter order mismatch: expected " + name + ", found " +
                    stored_name);
    const uint32_t ndim = read_u32(in, path);
    std::vector<int> shape(ndim);
    for (uint32_t i = 0; i < ndim; ++i) shape[i] = static_cast<int>(read_u32(in, path));
    if (shape != tensor.shape())
      throw ShapeError("checkpoint: " + name + " stored as " + shape_str(shape) +
                       ", registry has " + shape_str(tensor.shape()));
    Tensor handle = tensor;
    in.read(reinterpret_cast<char*>(handle.values().data()),
            static_cast<std::streamsize>(handle.values().size() * sizeof(double)));
    if (!in) throw IoError("checkpoint: truncated file: " + path);
  }
  if (in.peek() != std::ifstream::traits_type::eof())
    throw IoError("checkpoint: trailing bytes in " + path);
}

uint64_t checkpoint_config_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot read " + path);
  return read_header(in, path);
}

}  // namespace modalign
