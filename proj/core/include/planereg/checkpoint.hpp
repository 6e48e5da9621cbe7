// Copyright 2026 the planereg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include "planereg/model.hpp"

namespace planereg {

/// Versioned binary model snapshot.  Layout, all multi-byte values
/// little-endian:
///
///   8 bytes   magic "PLNRGCP1"
///   u32       format version (1)
///   config echo: u32 variant, u32 representation, 3 x i32 input_dims,
///                u32 n + n x i32 channels, u32 n + n x i32 fc_widths,
///                i32 n_regions
///   u32       tensor count (params then buffers)
///   u32       param count (first this many tensors are parameters)
///   per tensor: u32 name length, name bytes, u32 ndims, ndims x i32 shape,
///               prod(shape) x f32 data
///
/// Weights are stored exactly as held in memory (32-bit floats), so a
/// save/load round trip preserves forward outputs bit-for-bit.
void save_checkpoint(const std::string& path, const ModelState<float>& state);

/// Throws DataError on missing files, bad magic/version, or any mismatch
/// between the config echo and the stored tensor table.
ModelState<float> load_checkpoint(const std::string& path);

}  // namespace planereg
