// Copyright 2026 The MoVQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "movq/vq/tokens.hpp"

#include <cstring>
#include <fstream>

#include "movq/core/error.hpp"

namespace movq::vq {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'V', 'Q', 'T', 'O', 'K', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>* out, std::uint32_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out->push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> serialize_tokens(const TokenGrid& grid) {
  if (grid.h <= 0 || grid.w <= 0 || grid.c <= 0)
    throw ConfigError("tokens: empty grid");
  if (grid.vocab < 2 || grid.vocab > 65536)
    throw ConfigError("tokens: vocabulary must be in [2, 65536]");
  std::vector<std::uint8_t> out;
  out.reserve(28 + static_cast<std::size_t>(grid.count()) * 2);
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u32(&out, kVersion);
  put_u32(&out, static_cast<std::uint32_t>(grid.h));
  put_u32(&out, static_cast<std::uint32_t>(grid.w));
  put_u32(&out, static_cast<std::uint32_t>(grid.c));
  put_u32(&out, static_cast<std::uint32_t>(grid.vocab));
  for (int idx : grid.indices) {
    if (idx < 0 || idx >= grid.vocab)
      throw ValidationError("tokens: index outside [0, K)");
    out.push_back(static_cast<std::uint8_t>(idx & 0xff));
    out.push_back(static_cast<std::uint8_t>((idx >> 8) & 0xff));
  }
  return out;
}

TokenGrid deserialize_tokens(const std::uint8_t* data, std::size_t size) {
  if (size < 28) throw FormatError("tokens: truncated header");
  if (std::memcmp(data, kMagic, 8) != 0) throw FormatError("tokens: bad magic");
  if (get_u32(data + 8) != kVersion)
    throw FormatError("tokens: unsupported version");
  TokenGrid grid;
  grid.h = static_cast<int>(get_u32(data + 12));
  grid.w = static_cast<int>(get_u32(data + 16));
  grid.c = static_cast<int>(get_u32(data + 20));
  grid.vocab = static_cast<int>(get_u32(data + 24));
  if (grid.h <= 0 || grid.w <= 0 || grid.c <= 0 || grid.vocab < 2 ||
      grid.vocab > 65536)
    throw FormatError("tokens: implausible geometry");
  std::int64_t n = grid.count();
  if (size != 28 + static_cast<std::size_t>(n) * 2)
    throw FormatError("tokens: truncated payload");
  grid.indices.resize(static_cast<std::size_t>(n));
  const std::uint8_t* p = data + 28;
  for (std::int64_t i = 0; i < n; ++i, p += 2) {
    int idx = static_cast<int>(p[0]) | (static_cast<int>(p[1]) << 8);
    if (idx >= grid.vocab)
      throw ValidationError("tokens: index outside [0, K)");
    grid.indices[static_cast<std::size_t>(i)] = idx;
  }
  return grid;
}

void write_tokens_file(const std::string& path, const TokenGrid& grid) {
  auto bytes = serialize_tokens(grid);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("tokens: cannot open '" + path + "' for write");
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError("tokens: write failed for '" + path + "'");
}

TokenGrid read_tokens_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw FormatError("tokens: cannot open '" + path + "'");
  auto size = static_cast<std::size_t>(is.tellg());
  is.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  is.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(size));
  if (!is) throw FormatError("tokens: read failed for '" + path + "'");
  return deserialize_tokens(bytes.data(), bytes.size());
}

}  // namespace movq::vq
