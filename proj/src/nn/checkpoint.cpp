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

#include "movq/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "movq/core/error.hpp"

namespace movq::nn {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'V', 'Q', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_string(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
  std::uint32_t len = get_u32(is);
  if (len > (1u << 20)) throw FormatError("checkpoint: oversized string");
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw FormatError("checkpoint: truncated file");
  return s;
}

}  // namespace

const Tensor& Checkpoint::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end())
    throw FormatError("checkpoint: missing array '" + name + "'");
  return it->second;
}

std::string Checkpoint::config_value(const std::string& key) const {
  auto it = config.find(key);
  if (it == config.end())
    throw FormatError("checkpoint: missing config key '" + key + "'");
  return it->second;
}

int Checkpoint::config_int(const std::string& key) const {
  return std::stoi(config_value(key));
}

float Checkpoint::config_float(const std::string& key) const {
  return std::stof(config_value(key));
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("checkpoint: cannot open '" + path + "' for write");
  os.write(kMagic, 8);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(ck.config.size()));
  for (const auto& [k, v] : ck.config) {
    put_string(os, k);
    put_string(os, v);
  }
  put_u32(os, static_cast<std::uint32_t>(ck.arrays.size()));
  for (const auto& [name, t] : ck.arrays) {
    put_string(os, name);
    put_u32(os, static_cast<std::uint32_t>(t.ndim()));
    for (int i = 0; i < t.ndim(); ++i)
      put_u32(os, static_cast<std::uint32_t>(t.dim(i)));
    static_assert(sizeof(float) == 4);
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.numel() * sizeof(float)));
  }
  if (!os) throw FormatError("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("checkpoint: bad magic");
  std::uint32_t version = get_u32(is);
  if (version != kVersion) throw FormatError("checkpoint: unsupported version");
  Checkpoint ck;
  std::uint32_t nconf = get_u32(is);
  for (std::uint32_t i = 0; i < nconf; ++i) {
    std::string k = get_string(is);
    ck.config[k] = get_string(is);
  }
  std::uint32_t narr = get_u32(is);
  for (std::uint32_t i = 0; i < narr; ++i) {
    std::string name = get_string(is);
    std::uint32_t ndim = get_u32(is);
    if (ndim > 8) throw FormatError("checkpoint: bad rank");
    std::vector<int> shape(ndim);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::uint32_t v = get_u32(is);
      if (v == 0 || v > (1u << 28)) throw FormatError("checkpoint: bad dim");
      shape[d] = static_cast<int>(v);
    }
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!is) throw FormatError("checkpoint: truncated array payload");
    ck.arrays.emplace(std::move(name), std::move(t));
  }
  return ck;
}

}  // namespace movq::nn
