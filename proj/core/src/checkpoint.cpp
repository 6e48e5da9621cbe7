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

#include "planereg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "planereg/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace planereg {

namespace {

constexpr char kMagic[8] = {'P', 'L', 'N', 'R', 'G', 'C', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

void put_i32(std::ostream& os, std::int32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}

void put_ints(std::ostream& os, const std::vector<int>& values) {
  put_u32(os, static_cast<std::uint32_t>(values.size()));
  for (int v : values) put_i32(os, v);
}

std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  if (!is) throw DataError("checkpoint: truncated file");
  return v;
}

std::int32_t get_i32(std::istream& is) {
  return static_cast<std::int32_t>(get_u32(is));
}

std::vector<int> get_ints(std::istream& is, std::size_t limit = 1u << 20) {
  const std::uint32_t n = get_u32(is);
  if (n > limit) throw DataError("checkpoint: implausible list length");
  std::vector<int> values(n);
  for (auto& v : values) v = get_i32(is);
  return values;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState<float>& state) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open for writing: " + path);

  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kVersion);

  const ModelConfig& config = state.config;
  put_u32(os, static_cast<std::uint32_t>(config.variant));
  put_u32(os, static_cast<std::uint32_t>(config.representation));
  for (int d : config.input_dims) put_i32(os, d);
  put_ints(os, config.channels);
  put_ints(os, config.fc_widths);
  put_i32(os, config.n_regions);

  put_u32(os, static_cast<std::uint32_t>(state.params.size() + state.buffers.size()));
  put_u32(os, static_cast<std::uint32_t>(state.params.size()));
  auto put_tensor = [&os](const NamedTensor<float>& t) {
    put_u32(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_ints(os, t.shape);
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  };
  for (const auto& t : state.params) put_tensor(t);
  for (const auto& t : state.buffers) put_tensor(t);
  if (!os) throw DataError("checkpoint: write failed: " + path);
}

ModelState<float> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path);

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(magic, magic + 8, kMagic)) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(is);
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }

  ModelConfig config;
  const std::uint32_t variant = get_u32(is);
  if (variant > 2) throw DataError("checkpoint: bad variant tag");
  config.variant = static_cast<ModelVariant>(variant);
  const std::uint32_t repr = get_u32(is);
  if (repr > 3) throw DataError("checkpoint: bad representation tag");
  config.representation = static_cast<RepresentationKind>(repr);
  for (int& d : config.input_dims) d = get_i32(is);
  config.channels = get_ints(is);
  config.fc_widths = get_ints(is);
  config.n_regions = get_i32(is);
  config.validate();

  // Seed irrelevant: every value is about to be overwritten from the file.
  ModelState<float> state = init_state<float>(config, 0);
  const std::uint32_t n_tensors = get_u32(is);
  const std::uint32_t n_params = get_u32(is);
  if (n_params != state.params.size() ||
      n_tensors != state.params.size() + state.buffers.size()) {
    throw DataError("checkpoint: tensor table does not match config echo");
  }

  auto get_tensor = [&is, &path](NamedTensor<float>& t) {
    const std::uint32_t name_len = get_u32(is);
    if (name_len > 4096) throw DataError("checkpoint: implausible tensor name");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::vector<int> shape = get_ints(is);
    if (name != t.name || shape != t.shape) {
      throw DataError("checkpoint: tensor mismatch at " + t.name + " in " + path);
    }
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw DataError("checkpoint: truncated tensor data in " + path);
  };
  for (auto& t : state.params) get_tensor(t);
  for (auto& t : state.buffers) get_tensor(t);
  return state;
}

}  // namespace planereg
