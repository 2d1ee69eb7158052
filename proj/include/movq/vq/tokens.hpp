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

#ifndef MOVQ_VQ_TOKENS_HPP_
#define MOVQ_VQ_TOKENS_HPP_

#include <cstdint>
#include <string>
#include <vector>

namespace movq::vq {

// h x w x c grid of codebook indices, the interchange object between the
// autoencoder and the prior. Stored row-major with the channel fastest.
struct TokenGrid {
  int h = 0, w = 0, c = 0;
  int vocab = 0;
  std::vector<int> indices;

  TokenGrid() = default;
  TokenGrid(int h_, int w_, int c_, int vocab_)
      : h(h_), w(w_), c(c_), vocab(vocab_),
        indices(static_cast<std::size_t>(h_) * w_ * c_, 0) {}

  std::int64_t count() const { return static_cast<std::int64_t>(h) * w * c; }
  int& at(int i, int j, int ch) {
    return indices[(static_cast<std::size_t>(i) * w + j) * c + ch];
  }
  int at(int i, int j, int ch) const {
    return indices[(static_cast<std::size_t>(i) * w + j) * c + ch];
  }
  bool operator==(const TokenGrid& o) const {
    return h == o.h && w == o.w && c == o.c && vocab == o.vocab &&
           indices == o.indices;
  }
};

// On-disk form: magic "MOVQTOKS", version u32 LE, then h, w, c, K as u32 LE,
// then h*w*c unsigned 16-bit LE indices, row-major with the channel fastest.
std::vector<std::uint8_t> serialize_tokens(const TokenGrid& grid);

// Throws FormatError on bad magic/version/truncation, ValidationError when a
// payload index is outside [0, K).
TokenGrid deserialize_tokens(const std::uint8_t* data, std::size_t size);

void write_tokens_file(const std::string& path, const TokenGrid& grid);
TokenGrid read_tokens_file(const std::string& path);

}  // namespace movq::vq

#endif  // MOVQ_VQ_TOKENS_HPP_
