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

#include <cstdio>
#include <vector>

#include "doctest.h"
#include "movq/core/error.hpp"
#include "movq/core/rng.hpp"
#include "movq/vq/tokens.hpp"

namespace vq = movq::vq;

namespace {

vq::TokenGrid random_grid(movq::Rng& rng, int h, int w, int c, int vocab) {
  vq::TokenGrid grid(h, w, c, vocab);
  for (int& v : grid.indices)
    v = static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab)));
  return grid;
}

}  // namespace

TEST_CASE("serialization round-trips arbitrary grids") {
  movq::Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    int h = 1 + static_cast<int>(rng.below(9));
    int w = 1 + static_cast<int>(rng.below(9));
    int c = 1 + static_cast<int>(rng.below(4));
    int vocab = 2 + static_cast<int>(rng.below(1000));
    vq::TokenGrid grid = random_grid(rng, h, w, c, vocab);
    auto bytes = vq::serialize_tokens(grid);
    vq::TokenGrid back = vq::deserialize_tokens(bytes.data(), bytes.size());
    CHECK(back == grid);
  }
}

TEST_CASE("wire format layout") {
  movq::Rng rng(32);
  vq::TokenGrid grid = random_grid(rng, 16, 16, 4, 1024);
  auto bytes = vq::serialize_tokens(grid);
  // 8-byte magic + four u32 header words + 16*16*4 two-byte indices.
  CHECK(bytes.size() == 28 + 2048);
  CHECK(bytes[0] == 'M');
  CHECK(bytes[7] == 'S');
  // Version 1, then h.
  CHECK(bytes[8] == 1);
  CHECK(bytes[9] == 0);
  CHECK(bytes[12] == 16);
  // First payload index, little endian.
  int first = bytes[28] | (bytes[29] << 8);
  CHECK(first == grid.indices[0]);
  // Channel-fastest: the second u16 is (0,0,1).
  int second = bytes[30] | (bytes[31] << 8);
  CHECK(second == grid.at(0, 0, 1));
}

TEST_CASE("deserialize rejects malformed input") {
  movq::Rng rng(33);
  vq::TokenGrid grid = random_grid(rng, 4, 4, 2, 16);
  auto bytes = vq::serialize_tokens(grid);

  SUBCASE("bad magic") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(vq::deserialize_tokens(bad.data(), bad.size()),
                    movq::FormatError);
  }
  SUBCASE("truncated header") {
    CHECK_THROWS_AS(vq::deserialize_tokens(bytes.data(), 11),
                    movq::FormatError);
  }
  SUBCASE("truncated payload") {
    CHECK_THROWS_AS(vq::deserialize_tokens(bytes.data(), bytes.size() - 3),
                    movq::FormatError);
  }
  SUBCASE("trailing garbage") {
    auto bad = bytes;
    bad.push_back(0);
    CHECK_THROWS_AS(vq::deserialize_tokens(bad.data(), bad.size()),
                    movq::FormatError);
  }
  SUBCASE("unsupported version") {
    auto bad = bytes;
    bad[8] = 9;
    CHECK_THROWS_AS(vq::deserialize_tokens(bad.data(), bad.size()),
                    movq::FormatError);
  }
  SUBCASE("index at or above the vocabulary") {
    auto bad = bytes;
    bad[28] = 16;  // vocab is 16, so 16 is out of range
    bad[29] = 0;
    CHECK_THROWS_AS(vq::deserialize_tokens(bad.data(), bad.size()),
                    movq::ValidationError);
  }
}

TEST_CASE("serialize validates its input") {
  vq::TokenGrid grid(2, 2, 1, 8);
  grid.indices[1] = 8;
  CHECK_THROWS_AS(vq::serialize_tokens(grid), movq::ValidationError);
  grid.indices[1] = -1;
  CHECK_THROWS_AS(vq::serialize_tokens(grid), movq::ValidationError);
  vq::TokenGrid huge(1, 1, 1, 70000);
  CHECK_THROWS_AS(vq::serialize_tokens(huge), movq::ConfigError);
}

TEST_CASE("file round trip") {
  movq::Rng rng(34);
  vq::TokenGrid grid = random_grid(rng, 8, 8, 4, 64);
  const char* path = "tokens_roundtrip_test.movqtoks";
  vq::write_tokens_file(path, grid);
  vq::TokenGrid back = vq::read_tokens_file(path);
  CHECK(back == grid);
  std::remove(path);
  CHECK_THROWS_AS(vq::read_tokens_file("does_not_exist.movqtoks"),
                  movq::FormatError);
}
