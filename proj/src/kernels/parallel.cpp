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

// OpenMP lane. Worksharing is always over independent output elements; no
// parallel reductions, so results match the serial lane bit for bit at any
// thread count.

#include "movq/kernels/kernels.hpp"

#include "kernels/detail.hpp"

namespace movq::kernels::parallel {

namespace d = movq::kernels::detail;

void matmul(const float* a, const float* b, float* c, int m, int k, int n,
            bool trans_a, bool trans_b) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      c[static_cast<std::int64_t>(i) * n + j] =
          d::matmul_cell(a, b, m, k, n, trans_a, trans_b, i, j);
}

void batched_matmul(const float* a, const float* b, float* c, int batch, int m,
                    int k, int n, bool trans_a, bool trans_b) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < batch * m; ++t) {
    int bi = t / m, i = t % m;
    const float* ab = a + static_cast<std::int64_t>(bi) * m * k;
    const float* bb = b + static_cast<std::int64_t>(bi) * k * n;
    float* cb = c + static_cast<std::int64_t>(bi) * m * n;
    for (int j = 0; j < n; ++j)
      cb[static_cast<std::int64_t>(i) * n + j] =
          d::matmul_cell(ab, bb, m, k, n, trans_a, trans_b, i, j);
  }
}

void conv2d_forward(const float* x, const float* w, const float* bias,
                    float* y, int n, int cin, int h, int win, int cout, int kh,
                    int kw, int stride, int pad) {
  int ho = d::conv_out(h, kh, stride, pad);
  int wo = d::conv_out(win, kw, stride, pad);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * cout; ++t) {
    int img = t / cout, oc = t % cout;
    for (int oh = 0; oh < ho; ++oh)
      for (int ow = 0; ow < wo; ++ow)
        y[((static_cast<std::int64_t>(img) * cout + oc) * ho + oh) * wo + ow] =
            d::conv2d_cell(x, w, bias, cin, h, win, kh, kw, stride, pad, img,
                           oc, oh, ow);
  }
}

void conv2d_grad_input(const float* gy, const float* w, float* gx, int n,
                       int cin, int h, int win, int cout, int kh, int kw,
                       int stride, int pad) {
  int ho = d::conv_out(h, kh, stride, pad);
  int wo = d::conv_out(win, kw, stride, pad);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * cin; ++t) {
    int img = t / cin, ic = t % cin;
    for (int ih = 0; ih < h; ++ih)
      for (int iw = 0; iw < win; ++iw)
        gx[((static_cast<std::int64_t>(img) * cin + ic) * h + ih) * win + iw] =
            d::conv2d_grad_input_cell(gy, w, cin, cout, kh, kw, stride, pad,
                                      ho, wo, img, ic, ih, iw);
  }
}

void conv2d_grad_weight(const float* x, const float* gy, float* gw, float* gb,
                        int n, int cin, int h, int win, int cout, int kh,
                        int kw, int stride, int pad) {
  int ho = d::conv_out(h, kh, stride, pad);
  int wo = d::conv_out(win, kw, stride, pad);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < cout * cin; ++t) {
    int oc = t / cin, ic = t % cin;
    for (int r = 0; r < kh; ++r)
      for (int s = 0; s < kw; ++s)
        gw[((static_cast<std::int64_t>(oc) * cin + ic) * kh + r) * kw + s] =
            d::conv2d_grad_weight_cell(x, gy, n, cin, h, win, cout, ho, wo,
                                       stride, pad, oc, ic, r, s);
  }
  if (gb) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < cout; ++oc) {
      double acc = 0.0;
      for (int img = 0; img < n; ++img) {
        const float* g =
            gy + (static_cast<std::int64_t>(img) * cout + oc) * ho * wo;
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(ho) * wo; ++i)
          acc += g[i];
      }
      gb[oc] = static_cast<float>(acc);
    }
  }
}

void group_norm_forward(const float* x, float* y, float* mean, float* rstd,
                        int n, int c, int hw, int groups, float eps) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * groups; ++t)
    d::group_norm_group(x, y, mean, rstd, c, hw, groups, eps, t / groups,
                        t % groups);
}

void group_norm_backward(const float* x, const float* gy, const float* mean,
                         const float* rstd, float* gx, int n, int c, int hw,
                         int groups) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * groups; ++t)
    d::group_norm_group_grad(x, gy, mean, rstd, gx, c, hw, groups, t / groups,
                             t % groups);
}

void upsample_nearest(const float* x, float* y, int n, int c, int h, int w,
                      int factor) {
  int ho = h * factor, wo = w * factor;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * c; ++t) {
    const float* xc = x + static_cast<std::int64_t>(t) * h * w;
    float* yc = y + static_cast<std::int64_t>(t) * ho * wo;
    for (int i = 0; i < ho; ++i)
      for (int j = 0; j < wo; ++j)
        yc[static_cast<std::int64_t>(i) * wo + j] =
            xc[static_cast<std::int64_t>(i / factor) * w + j / factor];
  }
}

void upsample_nearest_grad(const float* gy, float* gx, int n, int c, int h,
                           int w, int factor) {
  int ho = h * factor, wo = w * factor;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < n * c; ++t) {
    const float* gyc = gy + static_cast<std::int64_t>(t) * ho * wo;
    float* gxc = gx + static_cast<std::int64_t>(t) * h * w;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        float acc = 0.0f;
        for (int di = 0; di < factor; ++di)
          for (int dj = 0; dj < factor; ++dj)
            acc += gyc[static_cast<std::int64_t>(i * factor + di) * wo +
                       j * factor + dj];
        gxc[static_cast<std::int64_t>(i) * w + j] = acc;
      }
  }
}

void softmax_rows(const float* x, float* y, std::int64_t rows, int cols) {
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    d::softmax_row(x + r * cols, y + r * cols, cols);
}

void softmax_rows_grad(const float* y, const float* gy, float* gx,
                       std::int64_t rows, int cols) {
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r)
    d::softmax_row_grad(y + r * cols, gy + r * cols, gx + r * cols, cols);
}

void nearest_code_scan(const float* z, const float* codebook, int cells,
                       int chunks, int code_dim, int codebook_size,
                       int* indices) {
#pragma omp parallel for schedule(static)
  for (int t = 0; t < cells * chunks; ++t)
    indices[t] = d::nearest_code(z + static_cast<std::int64_t>(t) * code_dim,
                                 codebook, code_dim, codebook_size);
}

}  // namespace movq::kernels::parallel
