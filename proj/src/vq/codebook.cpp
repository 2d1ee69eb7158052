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

#include "movq/vq/codebook.hpp"

#include <cmath>
#include <set>

#include "movq/core/error.hpp"
#include "movq/kernels/kernels.hpp"
#include "movq/nn/ops.hpp"

namespace movq::vq {

namespace {

struct Geometry {
  int n, n_z, h, w, chunks, code_dim, codebook_size;
  std::int64_t cells;  // n * h * w
};

Geometry check_geometry(const Tensor& z_hat, const Tensor& entries,
                        int chunks) {
  if (z_hat.ndim() != 4)
    throw ConfigError("quantize: latent must be (n, n_z, h, w)");
  if (entries.ndim() != 2 || entries.dim(0) < 2)
    throw ConfigError("quantize: codebook must be (K, n_q) with K >= 2");
  Geometry g;
  g.n = z_hat.dim(0);
  g.n_z = z_hat.dim(1);
  g.h = z_hat.dim(2);
  g.w = z_hat.dim(3);
  g.chunks = chunks;
  g.codebook_size = entries.dim(0);
  g.code_dim = entries.dim(1);
  if (chunks < 1 || g.n_z % chunks != 0)
    throw ConfigError("quantize: channel count not divisible by chunk count");
  if (g.n_z / chunks != g.code_dim)
    throw ConfigError("quantize: n_z / chunks must equal the codevector dim");
  if (!z_hat.all_finite() || !entries.all_finite())
    throw NumericError("quantize: non-finite input");
  g.cells = static_cast<std::int64_t>(g.n) * g.h * g.w;
  return g;
}

// NCHW -> per-cell channel-contiguous rows, one row per (cell, chunk) once
// reinterpreted with code_dim columns.
Tensor cell_major(const Tensor& z_hat, const Geometry& g) {
  Tensor out({static_cast<int>(g.cells), g.n_z});
  for (int img = 0; img < g.n; ++img)
    for (int i = 0; i < g.h; ++i)
      for (int j = 0; j < g.w; ++j) {
        std::int64_t cell = (static_cast<std::int64_t>(img) * g.h + i) * g.w + j;
        for (int ch = 0; ch < g.n_z; ++ch)
          out[cell * g.n_z + ch] =
              z_hat[((static_cast<std::int64_t>(img) * g.n_z + ch) * g.h + i) *
                        g.w +
                    j];
      }
  return out;
}

std::vector<int> scan_indices(const Tensor& cells_buf, const Tensor& entries,
                              const Geometry& g) {
  std::vector<int> idx(static_cast<std::size_t>(g.cells) * g.chunks);
  kernels::nearest_code_scan(cells_buf.data(), entries.data(),
                             static_cast<int>(g.cells), g.chunks, g.code_dim,
                             g.codebook_size, idx.data());
  return idx;
}

std::vector<TokenGrid> to_grids(const std::vector<int>& idx,
                                const Geometry& g) {
  std::vector<TokenGrid> grids;
  grids.reserve(static_cast<std::size_t>(g.n));
  for (int img = 0; img < g.n; ++img) {
    TokenGrid grid(g.h, g.w, g.chunks, g.codebook_size);
    std::int64_t base =
        static_cast<std::int64_t>(img) * g.h * g.w * g.chunks;
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.h) * g.w * g.chunks;
         ++i)
      grid.indices[static_cast<std::size_t>(i)] =
          idx[static_cast<std::size_t>(base + i)];
    grids.push_back(std::move(grid));
  }
  return grids;
}

Tensor assemble_z_q(const std::vector<int>& idx, const Tensor& entries,
                    const Geometry& g) {
  Tensor z_q({g.n, g.n_z, g.h, g.w});
  for (int img = 0; img < g.n; ++img)
    for (int i = 0; i < g.h; ++i)
      for (int j = 0; j < g.w; ++j) {
        std::int64_t cell = (static_cast<std::int64_t>(img) * g.h + i) * g.w + j;
        for (int chunk = 0; chunk < g.chunks; ++chunk) {
          const float* e =
              entries.data() +
              static_cast<std::int64_t>(idx[cell * g.chunks + chunk]) *
                  g.code_dim;
          for (int t = 0; t < g.code_dim; ++t) {
            int ch = chunk * g.code_dim + t;
            z_q[((static_cast<std::int64_t>(img) * g.n_z + ch) * g.h + i) * g.w +
                j] = e[t];
          }
        }
      }
  return z_q;
}

}  // namespace

Tensor codebook_init(int codebook_size, int code_dim, Rng& rng) {
  if (codebook_size < 2 || code_dim < 1)
    throw ConfigError("codebook: need K >= 2 and n_q >= 1");
  float bound = 1.0f / static_cast<float>(codebook_size);
  Tensor t({codebook_size, code_dim});
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

QuantizeResult quantize(const Tensor& z_hat, const Tensor& entries,
                        int chunks) {
  Geometry g = check_geometry(z_hat, entries, chunks);
  Tensor cells_buf = cell_major(z_hat, g);
  std::vector<int> idx = scan_indices(cells_buf, entries, g);

  QuantizeResult out;
  out.indices = to_grids(idx, g);
  out.z_q = assemble_z_q(idx, entries, g);

  double acc = 0.0;
  std::int64_t rows = g.cells * g.chunks;
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* z = cells_buf.data() + r * g.code_dim;
    const float* e =
        entries.data() +
        static_cast<std::int64_t>(idx[static_cast<std::size_t>(r)]) *
            g.code_dim;
    for (int t = 0; t < g.code_dim; ++t) {
      double d = static_cast<double>(z[t]) - e[t];
      acc += d * d;
    }
  }
  float loss = static_cast<float>(acc / static_cast<double>(rows));
  out.codebook_loss = loss;
  out.commitment_loss = loss;
  return out;
}

QuantizeGraph quantize_train(const nn::Var& z_hat, const nn::Var& entries,
                             int chunks) {
  Geometry g = check_geometry(z_hat.value(), entries.value(), chunks);
  Tensor cells_buf = cell_major(z_hat.value(), g);
  std::vector<int> idx = scan_indices(cells_buf, entries.value(), g);

  QuantizeGraph out;
  out.indices = to_grids(idx, g);

  // (cells*chunks, code_dim) view of the latent with gradient support.
  nn::Var z_rows = nn::reshape(
      nn::permute(z_hat, {0, 2, 3, 1}),
      {static_cast<int>(g.cells) * g.chunks, g.code_dim});
  nn::Var picked = nn::gather_rows(entries, idx);

  out.codebook_loss =
      nn::scale(nn::mse(nn::stop_gradient(z_rows), picked),
                static_cast<float>(g.code_dim));
  out.commitment_loss =
      nn::scale(nn::mse(z_rows, nn::stop_gradient(picked)),
                static_cast<float>(g.code_dim));
  out.z_q = nn::straight_through(z_hat, assemble_z_q(idx, entries.value(), g));
  return out;
}

Tensor dequantize(const TokenGrid& grid, const Tensor& entries) {
  if (entries.ndim() != 2) throw ConfigError("dequantize: bad codebook shape");
  if (grid.vocab != entries.dim(0))
    throw ConfigError("dequantize: vocabulary does not match the codebook");
  int code_dim = entries.dim(1);
  Geometry g{1,          grid.c * code_dim, grid.h, grid.w,
             grid.c,     code_dim,          grid.vocab,
             static_cast<std::int64_t>(grid.h) * grid.w};
  for (int v : grid.indices)
    if (v < 0 || v >= grid.vocab)
      throw ValidationError("dequantize: index outside [0, K)");
  return assemble_z_q(grid.indices, entries, g);
}

UsageStats usage_stats(const std::vector<TokenGrid>& grids,
                       int codebook_size) {
  if (grids.empty()) throw ArgumentError("usage_stats: no grids");
  if (codebook_size < 1) throw ArgumentError("usage_stats: bad K");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(codebook_size), 0);
  std::int64_t total = 0;
  for (const TokenGrid& grid : grids)
    for (int v : grid.indices) {
      if (v < 0 || v >= codebook_size)
        throw ValidationError("usage_stats: index outside [0, K)");
      ++counts[static_cast<std::size_t>(v)];
      ++total;
    }
  if (total == 0) throw ArgumentError("usage_stats: no indices");
  UsageStats s;
  int distinct = 0;
  double entropy = 0.0;
  for (std::int64_t cnt : counts) {
    if (cnt == 0) continue;
    ++distinct;
    double p = static_cast<double>(cnt) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  s.usage_fraction = static_cast<double>(distinct) / codebook_size;
  s.perplexity = std::exp(entropy);
  return s;
}

}  // namespace movq::vq
