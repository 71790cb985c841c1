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

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modalign/tensor.hpp"

namespace modalign {

// Checkpoint file, all integers and floats little-endian:
//   8 bytes  magic "MALNCKPT"
//   u32      format version (1)
//   u64      config hash
//   u32      parameter count
// then per parameter, in registry order:
//   u32      name length, name bytes
//   u32      ndim, u32 dims...
//   f64      values, row-major
void save_checkpoint(const std::string& path, uint64_t config_hash, const ParamList& params);

// Restores parameter values in place. The file must contain exactly the
// registry's names with matching shapes. A config-hash mismatch is refused
// with IoError unless force is set.
void load_checkpoint(const std::string& path, uint64_t config_hash, const ParamList& params,
                     bool force = false);

// Reads just the stored config hash (for diagnostics).
uint64_t checkpoint_config_hash(const std::string& path);

}  // namespace modalign
