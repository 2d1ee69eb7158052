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

#ifndef MOVQ_KERNELS_KERNELS_HPP_
#define MOVQ_KERNELS_KERNELS_HPP_

#include <cstdint>

// Numeric inner loops. Every kernel exists twice: movq::kernels::serial is the
// reference implementation, movq::kernels::parallel adds OpenMP worksharing
// over independent output elements. Both compute each output element with the
// same serial inner loop, so results are bit-identical and independent of the
// thread count. The unqualified functions dispatch on the active backend.

namespace movq::kernels {

enum class Backend { kSerial, kParallel };

void set_backend(Backend b);
Backend backend();
bool parallel_available();
int thread_count();

#define MOVQ_KERNEL_DECLS                                                     \
  /* c[m,n] = op(a) * op(b); trans_* reads the operand transposed. */         \
  void matmul(const float* a, const float* b, float* c, int m, int k, int n,  \
              bool trans_a, bool trans_b);                                    \
  void batched_matmul(const float* a, const float* b, float* c, int batch,    \
                      int m, int k, int n, bool trans_a, bool trans_b);       \
  /* NCHW direct convolution; y is (h + 2*pad - kh)/stride + 1 square. */     \
  void conv2d_forward(const float* x, const float* w, const float* bias,      \
                      float* y, int n, int cin, int h, int win, int cout,     \
                      int kh, int kw, int stride, int pad);                   \
  void conv2d_grad_input(const float* gy, const float* w, float* gx, int n,   \
                         int cin, int h, int win, int cout, int kh, int kw,   \
                         int stride, int pad);                                \
  void conv2d_grad_weight(const float* x, const float* gy, float* gw,         \
                          float* gb, int n, int cin, int h, int win,          \
                          int cout, int kh, int kw, int stride, int pad);     \
  /* Normalizes over (channels/groups)*hw elements; saves mean and 1/std. */  \
  void group_norm_forward(const float* x, float* y, float* mean, float* rstd, \
                          int n, int c, int hw, int groups, float eps);       \
  void group_norm_backward(const float* x, const float* gy,                   \
                           const float* mean, const float* rstd, float* gx,   \
                           int n, int c, int hw, int groups);                 \
  void upsample_nearest(const float* x, float* y, int n, int c, int h, int w, \
                        int factor);                                          \
  void upsample_nearest_grad(const float* gy, float* gx, int n, int c, int h, \
                             int w, int factor);                              \
  void softmax_rows(const float* x, float* y, std::int64_t rows, int cols);   \
  void softmax_rows_grad(const float* y, const float* gy, float* gx,          \
                         std::int64_t rows, int cols);                        \
  /* Per (cell, chunk) squared-distance argmin over the codebook; ties go to  \
     the lowest index. z is cells x (chunks*code_dim), chunk-contiguous. */   \
  void nearest_code_scan(const float* z, const float* codebook, int cells,    \
                         int chunks, int code_dim, int codebook_size,         \
                         int* indices);

namespace serial {
MOVQ_KERNEL_DECLS
}

namespace parallel {
MOVQ_KERNEL_DECLS
}

MOVQ_KERNEL_DECLS

#undef MOVQ_KERNEL_DECLS

}  // namespace movq::kernels

#endif  // MOVQ_KERNELS_KERNELS_HPP_
