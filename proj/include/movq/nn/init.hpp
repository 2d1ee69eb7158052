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

#ifndef MOVQ_NN_INIT_HPP_
#define MOVQ_NN_INIT_HPP_

#include <cmath>
#include <vector>

#include "movq/core/rng.hpp"
#include "movq/core/tensor.hpp"

namespace movq::nn {

inline Tensor normal_init(Rng& rng, std::vector<int> shape, float stddev) {
  Tensor t(std::move(shape));
  std::int64_t n = t.numel();
  for (std::int64_t i = 0; i < n; ++i)
    t[i] = static_cast<float>(rng.normal()) * stddev;
  return t;
}

inline Tensor uniform_init(Rng& rng, std::vector<int> shape, float lo,
                           float hi) {
  Tensor t(std::move(shape));
  std::int64_t n = t.numel();
  for (std::int64_t i = 0; i < n; ++i)
    t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// He-normal for conv weights feeding a rectified nonlinearity.
inline Tensor conv_init(Rng& rng, int cout, int cin, int kh, int kw) {
  float stddev = std::sqrt(2.0f / static_cast<float>(cin * kh * kw));
  return normal_init(rng, {cout, cin, kh, kw}, stddev);
}

// Glorot-uniform for dense layers.
inline Tensor linear_init(Rng& rng, int out, int in) {
  float bound = std::sqrt(6.0f / static_cast<float>(in + out));
  return uniform_init(rng, {out, in}, -bound, bound);
}

}  // namespace movq::nn

#endif  // MOVQ_NN_INIT_HPP_
