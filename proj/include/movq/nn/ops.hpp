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

#ifndef MOVQ_NN_OPS_HPP_
#define MOVQ_NN_OPS_HPP_

#include <cstdint>
#include <vector>

#include "movq/nn/graph.hpp"

namespace movq::nn {

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var add_scalar(const Var& a, float s);
Var relu(const Var& a);
Var leaky_relu(const Var& a, float slope);
Var swish(const Var& a);
Var tanh_op(const Var& a);
Var gelu(const Var& a);
Var sin_op(const Var& a);
Var cos_op(const Var& a);

// Reductions.
Var sum_all(const Var& a);
Var mean_all(const Var& a);
Var mse(const Var& a, const Var& b);

// Gradient routing.
Var stop_gradient(const Var& a);

/// Forward value is `quantized`; the gradient flows to `pre` unchanged
/// (identity Jacobian through the discretization).
Var straight_through(const Var& pre, const Tensor& quantized);

// Shape.
Var reshape(const Var& a, std::vector<int> shape);
Var permute(const Var& a, const std::vector<int>& perm);
Var repeat_batch(const Var& a, int n);
Var concat_channels(const Var& a, const Var& b);
Var concat_lastdim(const std::vector<Var>& parts);
Var prepend_token(const Var& token, const Var& x);
Var tail_rows(const Var& x, int start);

// Linear algebra.
Var matmul(const Var& a, const Var& b, bool trans_a = false,
           bool trans_b = false);
Var bmm(const Var& a, const Var& b, bool trans_a = false,
        bool trans_b = false);
Var linear(const Var& x, const Var& w, const Var& b);

// Broadcasting adds / affines.
Var add_matrix_bias(const Var& x, const Var& m);
Var channel_affine(const Var& x, const Var& gamma, const Var& beta);

// Network layers.
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
Var group_norm(const Var& x, int groups, float eps);
Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps);
Var upsample_nearest(const Var& x, int factor);
Var softmax_lastdim(const Var& x);
Var gather_rows(const Var& table, std::vector<int> rows);

/// Mean cross-entropy over the rows selected by `row_mask` (all rows when
/// empty). `logits` is rows x classes.
Var cross_entropy_rows(const Var& logits, std::vector<int> targets,
                       std::vector<std::uint8_t> row_mask);

}  // namespace movq::nn

#endif  // MOVQ_NN_OPS_HPP_
