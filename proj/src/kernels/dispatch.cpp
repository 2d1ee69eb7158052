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

#include "movq/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace movq::kernels {

namespace {

Backend initial_backend() {
  const char* env = std::getenv("MOVQ_BACKEND");
  if (env && std::strcmp(env, "serial") == 0) return Backend::kSerial;
  return Backend::kParallel;
}

std::atomic<Backend> g_backend{initial_backend()};

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

Backend backend() { return g_backend.load(std::memory_order_relaxed); }

bool parallel_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

#define MOVQ_DISPATCH(fn, ...)                \
  do {                                        \
    if (backend() == Backend::kSerial)        \
      serial::fn(__VA_ARGS__);                \
    else                                      \
      parallel::fn(__VA_ARGS__);              \
  } while (0)

void matmul(const float* a, const float* b, float* c, int m, int k, int n,
            bool trans_a, bool trans_b) {
  MOVQ_DISPATCH(matmul, a, b, c, m, k, n, trans_a, trans_b);
}

void batched_matmul(const float* a, const float* b, float* c, int batch, int m,
                    int k, int n, bool trans_a, bool trans_b) {
  MOVQ_DISPATCH(batched_matmul, a, b, c, batch, m, k, n, trans_a, trans_b);
}

void conv2d_forward(const float* x, const float* w, const float* bias,
                    float* y, int n, int cin, int h, int win, int cout, int kh,
                    int kw, int stride, int pad) {
  MOVQ_DISPATCH(conv2d_forward, x, w, bias, y, n, cin, h, win, cout, kh, kw,
                stride, pad);
}

void conv2d_grad_input(const float* gy, const float* w, float* gx, int n,
                       int cin, int h, int win, int cout, int kh, int kw,
                       int stride, int pad) {
  MOVQ_DISPATCH(conv2d_grad_input, gy, w, gx, n, cin, h, win, cout, kh, kw,
                stride, pad);
}

void conv2d_grad_weight(const float* x, const float* gy, float* gw, float* gb,
                        int n, int cin, int h, int win, int cout, int kh,
                        int kw, int stride, int pad) {
  MOVQ_DISPATCH(conv2d_grad_weight, x, gy, gw, gb, n, cin, h, win, cout, kh,
                kw, stride, pad);
}

void group_norm_forward(const float* x, float* y, float* mean, float* rstd,
                        int n, int c, int hw, int groups, float eps) {
  MOVQ_DISPATCH(group_norm_forward, x, y, mean, rstd, n, c, hw, groups, eps);
}

void group_norm_backward(const float* x, const float* gy, const float* mean,
                         const float* rstd, float* gx, int n, int c, int hw,
                         int groups) {
  MOVQ_DISPATCH(group_norm_backward, x, gy, mean, rstd, gx, n, c, hw, groups);
}

void upsample_nearest(const float* x, float* y, int n, int c, int h, int w,
                      int factor) {
  MOVQ_DISPATCH(upsample_nearest, x, y, n, c, h, w, factor);
}

void upsample_nearest_grad(const float* gy, float* gx, int n, int c, int h,
                           int w, int factor) {
  MOVQ_DISPATCH(upsample_nearest_grad, gy, gx, n, c, h, w, factor);
}

void softmax_rows(const float* x, float* y, std::int64_t rows, int cols) {
  MOVQ_DISPATCH(softmax_rows, x, y, rows, cols);
}

void softmax_rows_grad(const float* y, const float* gy, float* gx,
                       std::int64_t rows, int cols) {
  MOVQ_DISPATCH(softmax_rows_grad, y, gy, gx, rows, cols);
}

void nearest_code_scan(const float* z, const float* codebook, int cells,
                       int chunks, int code_dim, int codebook_size,
                       int* indices) {
  MOVQ_DISPATCH(nearest_code_scan, z, codebook, cells, chunks, code_dim,
                codebook_size, indices);
}

#undef MOVQ_DISPATCH

}  // namespace movq::kernels
