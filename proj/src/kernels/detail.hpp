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

#ifndef MOVQ_SRC_KERNELS_DETAIL_HPP_
#define MOVQ_SRC_KERNELS_DETAIL_HPP_

#include <cmath>
#include <cstdint>

// Per-output-element computations shared by the serial and parallel kernels.
// Each function computes one output element (or one group) with a fixed
// accumulation order, which is what makes the two backends bit-identical.

namespace movq::kernels::detail {

inline float dot_strided(const float* a, std::int64_t sa, const float* b,
                         std::int64_t sb, int k) {
  float acc = 0.0f;
  for (int i = 0; i < k; ++i) acc += a[i * sa] * b[i * sb];
  return acc;
}

// c[i,j] for c = op(a)*op(b) with a: m x k (or k x m transposed), b: k x n.
inline float matmul_cell(const float* a, const float* b, int m, int k, int n,
                         bool trans_a, bool trans_b, int i, int j) {
  (void)n;
  const float* ap = trans_a ? a + i : a + static_cast<std::int64_t>(i) * k;
  std::int64_t sa = trans_a ? m : 1;
  const float* bp = trans_b ? b + static_cast<std::int64_t>(j) * k : b + j;
  std::int64_t sb = trans_b ? 1 : n;
  return dot_strided(ap, sa, bp, sb, k);
}

inline float conv2d_cell(const float* x, const float* w, const float* bias,
                         int cin, int h, int win, int kh, int kw, int stride,
                         int pad, int img, int oc, int oh, int ow) {
  float acc = bias ? bias[oc] : 0.0f;
  const float* xi = x + static_cast<std::int64_t>(img) * cin * h * win;
  const float* wo = w + static_cast<std::int64_t>(oc) * cin * kh * kw;
  for (int ic = 0; ic < cin; ++ic) {
    const float* xc = xi + static_cast<std::int64_t>(ic) * h * win;
    const float* wc = wo + static_cast<std::int64_t>(ic) * kh * kw;
    for (int r = 0; r < kh; ++r) {
      int ih = oh * stride - pad + r;
      if (ih < 0 || ih >= h) continue;
      const float* xrow = xc + static_cast<std::int64_t>(ih) * win;
      const float* wrow = wc + static_cast<std::int64_t>(r) * kw;
      for (int s = 0; s < kw; ++s) {
        int iw = ow * stride - pad + s;
        if (iw < 0 || iw >= win) continue;
        acc += xrow[iw] * wrow[s];
      }
    }
  }
  return acc;
}

inline float conv2d_grad_input_cell(const float* gy, const float* w, int cin,
                                    int cout, int kh, int kw, int stride,
                                    int pad, int ho, int wo, int img, int ic,
                                    int ih, int iw) {
  float acc = 0.0f;
  const float* gyi = gy + static_cast<std::int64_t>(img) * cout * ho * wo;
  for (int oc = 0; oc < cout; ++oc) {
    const float* gyc = gyi + static_cast<std::int64_t>(oc) * ho * wo;
    const float* wc =
        w + (static_cast<std::int64_t>(oc) * cin + ic) * kh * kw;
    for (int r = 0; r < kh; ++r) {
      int num = ih + pad - r;
      if (num < 0 || num % stride != 0) continue;
      int oh = num / stride;
      if (oh >= ho) continue;
      for (int s = 0; s < kw; ++s) {
        int numw = iw + pad - s;
        if (numw < 0 || numw % stride != 0) continue;
        int ow = numw / stride;
        if (ow >= wo) continue;
        acc += gyc[static_cast<std::int64_t>(oh) * wo + ow] *
               wc[static_cast<std::int64_t>(r) * kw + s];
      }
    }
  }
  return acc;
}

inline float conv2d_grad_weight_cell(const float* x, const float* gy, int n,
                                     int cin, int h, int win, int cout, int ho,
                                     int wo, int stride, int pad, int oc,
                                     int ic, int r, int s) {
  float acc = 0.0f;
  for (int img = 0; img < n; ++img) {
    const float* gyc =
        gy + (static_cast<std::int64_t>(img) * cout + oc) * ho * wo;
    const float* xc = x + (static_cast<std::int64_t>(img) * cin + ic) * h * win;
    for (int oh = 0; oh < ho; ++oh) {
      int ih = oh * stride - pad + r;
      if (ih < 0 || ih >= h) continue;
      const float* xrow = xc + static_cast<std::int64_t>(ih) * win;
      const float* gyrow = gyc + static_cast<std::int64_t>(oh) * wo;
      for (int ow = 0; ow < wo; ++ow) {
        int iw = ow * stride - pad + s;
        if (iw < 0 || iw >= win) continue;
        acc += gyrow[ow] * xrow[iw];
      }
    }
  }
  return acc;
}

inline void group_norm_group(const float* x, float* y, float* mean,
                             float* rstd, int c, int hw, int groups, float eps,
                             int img, int g) {
  int cpg = c / groups;
  std::int64_t base =
      (static_cast<std::int64_t>(img) * c + static_cast<std::int64_t>(g) * cpg) * hw;
  std::int64_t m = static_cast<std::int64_t>(cpg) * hw;
  double sum = 0.0;
  for (std::int64_t i = 0; i < m; ++i) sum += x[base + i];
  double mu = sum / static_cast<double>(m);
  double var = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    double d = x[base + i] - mu;
    var += d * d;
  }
  var /= static_cast<double>(m);
  double rs = 1.0 / std::sqrt(var + eps);
  for (std::int64_t i = 0; i < m; ++i)
    y[base + i] = static_cast<float>((x[base + i] - mu) * rs);
  mean[static_cast<std::int64_t>(img) * groups + g] = static_cast<float>(mu);
  rstd[static_cast<std::int64_t>(img) * groups + g] = static_cast<float>(rs);
}

inline void group_norm_group_grad(const float* x, const float* gy,
                                  const float* mean, const float* rstd,
                                  float* gx, int c, int hw, int groups,
                                  int img, int g) {
  int cpg = c / groups;
  std::int64_t base =
      (static_cast<std::int64_t>(img) * c + static_cast<std::int64_t>(g) * cpg) * hw;
  std::int64_t m = static_cast<std::int64_t>(cpg) * hw;
  double mu = mean[static_cast<std::int64_t>(img) * groups + g];
  double rs = rstd[static_cast<std::int64_t>(img) * groups + g];
  double s1 = 0.0, s2 = 0.0;
  for (std::int64_t i = 0; i < m; ++i) {
    double xhat = (x[base + i] - mu) * rs;
    s1 += gy[base + i];
    s2 += gy[base + i] * xhat;
  }
  s1 /= static_cast<double>(m);
  s2 /= static_cast<double>(m);
  for (std::int64_t i = 0; i < m; ++i) {
    double xhat = (x[base + i] - mu) * rs;
    gx[base + i] = static_cast<float>(rs * (gy[base + i] - s1 - xhat * s2));
  }
}

inline void softmax_row(const float* x, float* y, int cols) {
  float mx = x[0];
  for (int j = 1; j < cols; ++j)
    if (x[j] > mx) mx = x[j];
  double sum = 0.0;
  for (int j = 0; j < cols; ++j) {
    double e = std::exp(static_cast<double>(x[j] - mx));
    y[j] = static_cast<float>(e);
    sum += e;
  }
  float inv = static_cast<float>(1.0 / sum);
  for (int j = 0; j < cols; ++j) y[j] *= inv;
}

inline void softmax_row_grad(const float* y, const float* gy, float* gx,
                             int cols) {
  double dot = 0.0;
  for (int j = 0; j < cols; ++j) dot += static_cast<double>(y[j]) * gy[j];
  for (int j = 0; j < cols; ++j)
    gx[j] = y[j] * (gy[j] - static_cast<float>(dot));
}

inline int nearest_code(const float* cell_chunk, const float* codebook,
                        int code_dim, int codebook_size) {
  int best = 0;
  float best_d = 0.0f;
  for (int kk = 0; kk < codebook_size; ++kk) {
    const float* e = codebook + static_cast<std::int64_t>(kk) * code_dim;
    float d = 0.0f;
    for (int t = 0; t < code_dim; ++t) {
      float diff = cell_chunk[t] - e[t];
      d += diff * diff;
    }
    if (kk == 0 || d < best_d) {
      best_d = d;
      best = kk;
    }
  }
  return best;
}

inline int conv_out(int h, int kh, int stride, int pad) {
  return (h + 2 * pad - kh) / stride + 1;
}

}  // namespace movq::kernels::detail

#endif  // MOVQ_SRC_KERNELS_DETAIL_HPP_
