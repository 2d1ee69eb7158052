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

#ifndef MOVQ_VQ_CODEBOOK_HPP_
#define MOVQ_VQ_CODEBOOK_HPP_

#include <vector>

#include "movq/core/rng.hpp"
#include "movq/core/tensor.hpp"
#include "movq/nn/graph.hpp"
#include "movq/vq/tokens.hpp"

namespace movq::vq {

// K trainable codevectors of dimension n_q, shared by all chunks.
Tensor codebook_init(int codebook_size, int code_dim, Rng& rng);

struct QuantizeResult {
  Tensor z_q;                      // same shape as the input latent
  std::vector<TokenGrid> indices;  // one grid per batch image
  float codebook_loss = 0.0f;
  float commitment_loss = 0.0f;
};

// Chunk-wise nearest-codevector quantization of a (n, n_z, h, w) latent
// against (K, n_q) entries with n_q = n_z / chunks. Ties take the lowest
// index. Losses use the per-chunk squared norm averaged over cells and
// chunks; the commitment weight is applied by the caller.
QuantizeResult quantize(const Tensor& z_hat, const Tensor& entries,
                        int chunks);

// Training-graph version: losses as differentiable scalars (codebook_loss
// reaches only `entries`, commitment_loss only the latent producer) and the
// quantized value wrapped so decoder gradients flow straight through to the
// latent.
struct QuantizeGraph {
  nn::Var z_q;               // straight-through value, shape of z_hat
  nn::Var codebook_loss;     // scalar
  nn::Var commitment_loss;   // scalar
  std::vector<TokenGrid> indices;
};
QuantizeGraph quantize_train(const nn::Var& z_hat, const nn::Var& entries,
                             int chunks);

// Rebuilds the quantized latent (1, n_z, h, w) a grid of indices denotes.
Tensor dequantize(const TokenGrid& grid, const Tensor& entries);

struct UsageStats {
  double usage_fraction = 0.0;  // distinct indices used / K
  double perplexity = 0.0;      // exp(entropy of the index distribution)
};
UsageStats usage_stats(const std::vector<TokenGrid>& grids, int codebook_size);

}  // namespace movq::vq

#endif  // MOVQ_VQ_CODEBOOK_HPP_
