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

#include "movq/nn/ops.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "movq/core/error.hpp"
#include "movq/kernels/kernels.hpp"
#include "kernels/detail.hpp"

namespace movq::nn {

namespace {

namespace kd = movq::kernels::detail;

void require(bool cond, const char* msg) {
  if (!cond) throw NumericError(msg);
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value()))
    throw NumericError(std::string(op) + ": shape mismatch");
}

template <class Fwd, class Dfdx>
Var unary_op(const Var& a, Fwd f, Dfdx dfdx, const char* name) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = f(x[i]);
  return make_node(
      std::move(y), {a},
      [dfdx](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        Tensor& g = p.ensure_grad();
        const Tensor& x = p.value;
        const Tensor& y = self.value;
        const Tensor& gy = self.grad;
        std::int64_t n = g.numel();
        for (std::int64_t i = 0; i < n; ++i) g[i] += dfdx(x[i], y[i]) * gy[i];
      },
      name);
}

std::vector<std::int64_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::int64_t> s(shape.size());
  std::int64_t acc = 1;
  for (int i = static_cast<int>(shape.size()) - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = acc;
    acc *= shape[static_cast<std::size_t>(i)];
  }
  return s;
}

Tensor permute_tensor(const Tensor& x, const std::vector<int>& perm) {
  int nd = x.ndim();
  std::vector<int> out_shape(static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i)
    out_shape[static_cast<std::size_t>(i)] = x.dim(perm[static_cast<std::size_t>(i)]);
  Tensor y(out_shape);
  auto in_strides = strides_of(x.shape());
  auto out_strides = strides_of(out_shape);
  std::int64_t n = x.numel();
  for (std::int64_t o = 0; o < n; ++o) {
    std::int64_t rem = o, src = 0;
    for (int i = 0; i < nd; ++i) {
      std::int64_t c = rem / out_strides[static_cast<std::size_t>(i)];
      rem -= c * out_strides[static_cast<std::size_t>(i)];
      src += c * in_strides[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
    }
    y[o] = x[src];
  }
  return y;
}

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor y(a.value().shape());
  std::int64_t n = y.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = a.value()[i] + b.value()[i];
  return make_node(std::move(y), {a, b},
                   [](Node& self) {
                     for (auto& p : self.parents)
                       if (p->requires_grad) p->accumulate(self.grad);
                   },
                   "add");
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor y(a.value().shape());
  std::int64_t n = y.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = a.value()[i] - b.value()[i];
  return make_node(std::move(y), {a, b},
                   [](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     if (pa.requires_grad) pa.accumulate(self.grad);
                     if (pb.requires_grad) {
                       Tensor& g = pb.ensure_grad();
                       std::int64_t n = g.numel();
                       for (std::int64_t i = 0; i < n; ++i) g[i] -= self.grad[i];
                     }
                   },
                   "sub");
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor y(a.value().shape());
  std::int64_t n = y.numel();
  for (std::int64_t i = 0; i < n; ++i) y[i] = a.value()[i] * b.value()[i];
  return make_node(std::move(y), {a, b},
                   [](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     std::int64_t n = self.grad.numel();
                     if (pa.requires_grad) {
                       Tensor& g = pa.ensure_grad();
                       for (std::int64_t i = 0; i < n; ++i)
                         g[i] += self.grad[i] * pb.value[i];
                     }
                     if (pb.requires_grad) {
                       Tensor& g = pb.ensure_grad();
                       for (std::int64_t i = 0; i < n; ++i)
                         g[i] += self.grad[i] * pa.value[i];
                     }
                   },
                   "mul");
}

Var scale(const Var& a, float s) {
  return unary_op(
      a, [s](float x) { return x * s; },
      [s](float, float) { return s; }, "scale");
}

Var add_scalar(const Var& a, float s) {
  return unary_op(
      a, [s](float x) { return x + s; }, [](float, float) { return 1.0f; },
      "add_scalar");
}

Var relu(const Var& a) {
  return unary_op(
      a, [](float x) { return x > 0.0f ? x : 0.0f; },
      [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; }, "relu");
}

Var leaky_relu(const Var& a, float slope) {
  return unary_op(
      a, [slope](float x) { return x > 0.0f ? x : slope * x; },
      [slope](float x, float) { return x > 0.0f ? 1.0f : slope; },
      "leaky_relu");
}

Var swish(const Var& a) {
  return unary_op(
      a,
      [](float x) {
        float s = 1.0f / (1.0f + std::exp(-x));
        return x * s;
      },
      [](float x, float) {
        float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f + x * (1.0f - s));
      },
      "swish");
}

Var tanh_op(const Var& a) {
  return unary_op(
      a, [](float x) { return std::tanh(x); },
      [](float, float y) { return 1.0f - y * y; }, "tanh");
}

Var gelu(const Var& a) {
  constexpr float kInvSqrt2 = 0.7071067811865475f;
  constexpr float kInvSqrt2Pi = 0.3989422804014327f;
  return unary_op(
      a,
      [kInvSqrt2](float x) {
        return 0.5f * x * (1.0f + std::erf(x * kInvSqrt2));
      },
      [kInvSqrt2, kInvSqrt2Pi](float x, float) {
        float cdf = 0.5f * (1.0f + std::erf(x * kInvSqrt2));
        float pdf = kInvSqrt2Pi * std::exp(-0.5f * x * x);
        return cdf + x * pdf;
      },
      "gelu");
}

Var sin_op(const Var& a) {
  return unary_op(
      a, [](float x) { return std::sin(x); },
      [](float x, float) { return std::cos(x); }, "sin");
}

Var cos_op(const Var& a) {
  return unary_op(
      a, [](float x) { return std::cos(x); },
      [](float x, float) { return -std::sin(x); }, "cos");
}

Var sum_all(const Var& a) {
  double acc = 0.0;
  std::int64_t n = a.value().numel();
  for (std::int64_t i = 0; i < n; ++i) acc += a.value()[i];
  return make_node(Tensor::scalar(static_cast<float>(acc)), {a},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor& g = p.ensure_grad();
                     float gy = self.grad[0];
                     std::int64_t n = g.numel();
                     for (std::int64_t i = 0; i < n; ++i) g[i] += gy;
                   },
                   "sum_all");
}

Var mean_all(const Var& a) {
  double acc = 0.0;
  std::int64_t n = a.value().numel();
  for (std::int64_t i = 0; i < n; ++i) acc += a.value()[i];
  return make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(n))),
                   {a},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor& g = p.ensure_grad();
                     float gy =
                         self.grad[0] / static_cast<float>(p.value.numel());
                     std::int64_t n = g.numel();
                     for (std::int64_t i = 0; i < n; ++i) g[i] += gy;
                   },
                   "mean_all");
}

Var mse(const Var& a, const Var& b) {
  require_same_shape(a, b, "mse");
  std::int64_t n = a.value().numel();
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double d = static_cast<double>(a.value()[i]) - b.value()[i];
    acc += d * d;
  }
  return make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(n))),
                   {a, b},
                   [](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     std::int64_t n = pa.value.numel();
                     float c = 2.0f * self.grad[0] / static_cast<float>(n);
                     if (pa.requires_grad) {
                       Tensor& g = pa.ensure_grad();
                       for (std::int64_t i = 0; i < n; ++i)
                         g[i] += c * (pa.value[i] - pb.value[i]);
                     }
                     if (pb.requires_grad) {
                       Tensor& g = pb.ensure_grad();
                       for (std::int64_t i = 0; i < n; ++i)
                         g[i] -= c * (pa.value[i] - pb.value[i]);
                     }
                   },
                   "mse");
}

Var stop_gradient(const Var& a) { return Var::leaf(a.value(), false); }

Var straight_through(const Var& pre, const Tensor& quantized) {
  if (!pre.value().same_shape(quantized))
    throw NumericError("straight_through: shape mismatch");
  return make_node(quantized, {pre},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     if (p.requires_grad) p.accumulate(self.grad);
                   },
                   "straight_through");
}

Var reshape(const Var& a, std::vector<int> shape) {
  if (Tensor::count(shape) != a.value().numel())
    throw NumericError("reshape: element count mismatch");
  return make_node(a.value().reshaped(std::move(shape)), {a},
                   [](Node& self) {
                     Node& p = *self.parents[0];
                     if (p.requires_grad)
                       p.accumulate(self.grad.reshaped(p.value.shape()));
                   },
                   "reshape");
}

Var permute(const Var& a, const std::vector<int>& perm) {
  require(static_cast<int>(perm.size()) == a.value().ndim(),
          "permute: rank mismatch");
  std::vector<int> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  return make_node(permute_tensor(a.value(), perm), {a},
                   [inverse](Node& self) {
                     Node& p = *self.parents[0];
                     if (p.requires_grad)
                       p.accumulate(permute_tensor(self.grad, inverse));
                   },
                   "permute");
}

Var repeat_batch(const Var& a, int n) {
  const Tensor& x = a.value();
  std::vector<int> shape;
  shape.push_back(n);
  for (int i = 0; i < x.ndim(); ++i) shape.push_back(x.dim(i));
  Tensor y(shape);
  std::int64_t stride = x.numel();
  for (int b = 0; b < n; ++b)
    std::memcpy(y.data() + static_cast<std::int64_t>(b) * stride, x.data(),
                static_cast<std::size_t>(stride) * sizeof(float));
  return make_node(std::move(y), {a},
                   [n](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor& g = p.ensure_grad();
                     std::int64_t stride = g.numel();
                     for (int b = 0; b < n; ++b) {
                       const float* src =
                           self.grad.data() + static_cast<std::int64_t>(b) * stride;
                       for (std::int64_t i = 0; i < stride; ++i) g[i] += src[i];
                     }
                   },
                   "repeat_batch");
}

Var concat_channels(const Var& a, const Var& b) {
  const Tensor& xa = a.value();
  const Tensor& xb = b.value();
  require(xa.ndim() == 4 && xb.ndim() == 4, "concat_channels: rank");
  require(xa.dim(0) == xb.dim(0) && xa.dim(2) == xb.dim(2) &&
              xa.dim(3) == xb.dim(3),
          "concat_channels: shape mismatch");
  int n = xa.dim(0), ca = xa.dim(1), cb = xb.dim(1);
  int hw = xa.dim(2) * xa.dim(3);
  Tensor y({n, ca + cb, xa.dim(2), xa.dim(3)});
  for (int img = 0; img < n; ++img) {
    std::memcpy(y.data() + static_cast<std::int64_t>(img) * (ca + cb) * hw,
                xa.data() + static_cast<std::int64_t>(img) * ca * hw,
                static_cast<std::size_t>(ca) * hw * sizeof(float));
    std::memcpy(y.data() + (static_cast<std::int64_t>(img) * (ca + cb) + ca) * hw,
                xb.data() + static_cast<std::int64_t>(img) * cb * hw,
                static_cast<std::size_t>(cb) * hw * sizeof(float));
  }
  return make_node(std::move(y), {a, b},
                   [ca, cb, hw, n](Node& self) {
                     Node& pa = *self.parents[0];
                     Node& pb = *self.parents[1];
                     if (pa.requires_grad) {
                       Tensor& g = pa.ensure_grad();
                       for (int img = 0; img < n; ++img) {
                         const float* src =
                             self.grad.data() +
                             static_cast<std::int64_t>(img) * (ca + cb) * hw;
                         float* dst =
                             g.data() + static_cast<std::int64_t>(img) * ca * hw;
                         for (std::int64_t i = 0;
                              i < static_cast<std::int64_t>(ca) * hw; ++i)
                           dst[i] += src[i];
                       }
                     }
                     if (pb.requires_grad) {
                       Tensor& g = pb.ensure_grad();
                       for (int img = 0; img < n; ++img) {
                         const float* src =
                             self.grad.data() +
                             (static_cast<std::int64_t>(img) * (ca + cb) + ca) * hw;
                         float* dst =
                             g.data() + static_cast<std::int64_t>(img) * cb * hw;
                         for (std::int64_t i = 0;
                              i < static_cast<std::int64_t>(cb) * hw; ++i)
                           dst[i] += src[i];
                       }
                     }
                   },
                   "concat_channels");
}

Var concat_lastdim(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_lastdim: no inputs");
  int rows = parts[0].value().dim(0);
  int total = 0;
  for (const Var& p : parts) {
    require(p.value().ndim() == 2 && p.value().dim(0) == rows,
            "concat_lastdim: shape mismatch");
    total += p.value().dim(1);
  }
  Tensor y({rows, total});
  std::vector<int> offsets;
  int off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    int d = p.value().dim(1);
    for (int r = 0; r < rows; ++r)
      std::memcpy(y.data() + static_cast<std::int64_t>(r) * total + off,
                  p.value().data() + static_cast<std::int64_t>(r) * d,
                  static_cast<std::size_t>(d) * sizeof(float));
    off += d;
  }
  return make_node(std::move(y), parts,
                   [offsets, rows, total](Node& self) {
                     for (std::size_t pi = 0; pi < self.parents.size(); ++pi) {
                       Node& p = *self.parents[pi];
                       if (!p.requires_grad) continue;
                       Tensor& g = p.ensure_grad();
                       int d = p.value.dim(1);
                       int off = offsets[pi];
                       for (int r = 0; r < rows; ++r) {
                         const float* src =
                             self.grad.data() +
                             static_cast<std::int64_t>(r) * total + off;
                         float* dst = g.data() + static_cast<std::int64_t>(r) * d;
                         for (int i = 0; i < d; ++i) dst[i] += src[i];
                       }
                     }
                   },
                   "concat_lastdim");
}

Var prepend_token(const Var& token, const Var& x) {
  const Tensor& t = token.value();
  const Tensor& xs = x.value();
  require(t.ndim() == 2 && xs.ndim() == 3, "prepend_token: rank");
  require(t.dim(0) == xs.dim(0) && t.dim(1) == xs.dim(2),
          "prepend_token: shape mismatch");
  int b = xs.dim(0), l = xs.dim(1), e = xs.dim(2);
  Tensor y({b, l + 1, e});
  for (int i = 0; i < b; ++i) {
    std::memcpy(y.data() + static_cast<std::int64_t>(i) * (l + 1) * e,
                t.data() + static_cast<std::int64_t>(i) * e,
                static_cast<std::size_t>(e) * sizeof(float));
    std::memcpy(y.data() + static_cast<std::int64_t>(i) * (l + 1) * e + e,
                xs.data() + static_cast<std::int64_t>(i) * l * e,
                static_cast<std::size_t>(l) * e * sizeof(float));
  }
  return make_node(std::move(y), {token, x},
                   [b, l, e](Node& self) {
                     Node& pt = *self.parents[0];
                     Node& px = *self.parents[1];
                     if (pt.requires_grad) {
                       Tensor& g = pt.ensure_grad();
                       for (int i = 0; i < b; ++i) {
                         const float* src =
                             self.grad.data() +
                             static_cast<std::int64_t>(i) * (l + 1) * e;
                         float* dst = g.data() + static_cast<std::int64_t>(i) * e;
                         for (int j = 0; j < e; ++j) dst[j] += src[j];
                       }
                     }
                     if (px.requires_grad) {
                       Tensor& g = px.ensure_grad();
                       for (int i = 0; i < b; ++i) {
                         const float* src =
                             self.grad.data() +
                             static_cast<std::int64_t>(i) * (l + 1) * e + e;
                         float* dst =
                             g.data() + static_cast<std::int64_t>(i) * l * e;
                         for (std::int64_t j = 0;
                              j < static_cast<std::int64_t>(l) * e; ++j)
                           dst[j] += src[j];
                       }
                     }
                   },
                   "prepend_token");
}

Var tail_rows(const Var& x, int start) {
  const Tensor& xs = x.value();
  require(xs.ndim() == 3 && start >= 0 && start <= xs.dim(1),
          "tail_rows: bad slice");
  int b = xs.dim(0), l = xs.dim(1), e = xs.dim(2);
  int lo = l - start;
  Tensor y({b, lo, e});
  for (int i = 0; i < b; ++i)
    std::memcpy(
        y.data() + static_cast<std::int64_t>(i) * lo * e,
        xs.data() + (static_cast<std::int64_t>(i) * l + start) * e,
        static_cast<std::size_t>(lo) * e * sizeof(float));
  return make_node(std::move(y), {x},
                   [b, l, e, start, lo](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor& g = p.ensure_grad();
                     for (int i = 0; i < b; ++i) {
                       const float* src =
                           self.grad.data() + static_cast<std::int64_t>(i) * lo * e;
                       float* dst =
                           g.data() + (static_cast<std::int64_t>(i) * l + start) * e;
                       for (std::int64_t j = 0;
                            j < static_cast<std::int64_t>(lo) * e; ++j)
                         dst[j] += src[j];
                     }
                   },
                   "tail_rows");
}

Var matmul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(ta.ndim() == 2 && tb.ndim() == 2, "matmul: rank");
  int m = trans_a ? ta.dim(1) : ta.dim(0);
  int k = trans_a ? ta.dim(0) : ta.dim(1);
  int kb = trans_b ? tb.dim(1) : tb.dim(0);
  int n = trans_b ? tb.dim(0) : tb.dim(1);
  require(k == kb, "matmul: inner dimension mismatch");
  require(!(trans_a && trans_b), "matmul: double transpose unsupported");
  Tensor y({m, n});
  kernels::matmul(ta.data(), tb.data(), y.data(), m, k, n, trans_a, trans_b);
  return make_node(
      std::move(y), {a, b},
      [m, k, n, trans_a, trans_b](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const float* gy = self.grad.data();
        if (pa.requires_grad) {
          Tensor tmp(pa.value.shape());
          if (!trans_a) {
            // ga = gy * op(b)^T
            if (!trans_b)
              kernels::matmul(gy, pb.value.data(), tmp.data(), m, n, k, false,
                              true);
            else
              kernels::matmul(gy, pb.value.data(), tmp.data(), m, n, k, false,
                              false);
          } else {
            // a stored [k,m]: ga^T = op(b) * gy^T -> ga = b? use b * gy with layout
            if (!trans_b)
              kernels::matmul(pb.value.data(), gy, tmp.data(), k, n, m, false,
                              true);
            else
              kernels::matmul(pb.value.data(), gy, tmp.data(), k, n, m, true,
                              true);
          }
          pa.accumulate(tmp);
        }
        if (pb.requires_grad) {
          Tensor tmp(pb.value.shape());
          if (!trans_b) {
            // gb = op(a)^T * gy
            if (!trans_a)
              kernels::matmul(pa.value.data(), gy, tmp.data(), k, m, n, true,
                              false);
            else
              kernels::matmul(pa.value.data(), gy, tmp.data(), k, m, n, false,
                              false);
          } else {
            // b stored [n,k]: gb = gy^T * op(a)
            if (!trans_a)
              kernels::matmul(gy, pa.value.data(), tmp.data(), n, m, k, true,
                              false);
            else
              kernels::matmul(gy, pa.value.data(), tmp.data(), n, m, k, true,
                              true);
          }
          pb.accumulate(tmp);
        }
      },
      "matmul");
}

Var bmm(const Var& a, const Var& b, bool trans_a, bool trans_b) {
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(ta.ndim() == 3 && tb.ndim() == 3, "bmm: rank");
  require(ta.dim(0) == tb.dim(0), "bmm: batch mismatch");
  require(!trans_a, "bmm: trans_a unsupported");
  int batch = ta.dim(0);
  int m = ta.dim(1), k = ta.dim(2);
  int kb = trans_b ? tb.dim(2) : tb.dim(1);
  int n = trans_b ? tb.dim(1) : tb.dim(2);
  require(k == kb, "bmm: inner dimension mismatch");
  Tensor y({batch, m, n});
  kernels::batched_matmul(ta.data(), tb.data(), y.data(), batch, m, k, n,
                          false, trans_b);
  return make_node(
      std::move(y), {a, b},
      [batch, m, k, n, trans_b](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const float* gy = self.grad.data();
        if (pa.requires_grad) {
          Tensor tmp(pa.value.shape());
          if (!trans_b)
            kernels::batched_matmul(gy, pb.value.data(), tmp.data(), batch, m,
                                    n, k, false, true);
          else
            kernels::batched_matmul(gy, pb.value.data(), tmp.data(), batch, m,
                                    n, k, false, false);
          pa.accumulate(tmp);
        }
        if (pb.requires_grad) {
          Tensor tmp(pb.value.shape());
          if (!trans_b)
            // gb[k,n] = a^T gy: batched with trans via loop
            for (int i = 0; i < batch; ++i)
              kernels::matmul(
                  pa.value.data() + static_cast<std::int64_t>(i) * m * k,
                  gy + static_cast<std::int64_t>(i) * m * n,
                  tmp.data() + static_cast<std::int64_t>(i) * k * n, k, m, n,
                  true, false);
          else
            // b stored [n,k]: gb = gy^T a
            for (int i = 0; i < batch; ++i)
              kernels::matmul(
                  gy + static_cast<std::int64_t>(i) * m * n,
                  pa.value.data() + static_cast<std::int64_t>(i) * m * k,
                  tmp.data() + static_cast<std::int64_t>(i) * n * k, n, m, k,
                  true, false);
          pb.accumulate(tmp);
        }
      },
      "bmm");
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const Tensor& tx = x.value();
  const Tensor& tw = w.value();
  require(tx.ndim() == 2 && tw.ndim() == 2, "linear: rank");
  int rows = tx.dim(0), in = tx.dim(1), out = tw.dim(0);
  require(tw.dim(1) == in, "linear: weight shape");
  Tensor y({rows, out});
  kernels::matmul(tx.data(), tw.data(), y.data(), rows, in, out, false, true);
  if (b.defined()) {
    require(b.value().numel() == out, "linear: bias shape");
    for (int r = 0; r < rows; ++r)
      for (int o = 0; o < out; ++o)
        y[static_cast<std::int64_t>(r) * out + o] += b.value()[o];
  }
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_node(
      std::move(y), std::move(parents),
      [rows, in, out](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const float* gy = self.grad.data();
        if (px.requires_grad) {
          Tensor tmp({rows, in});
          kernels::matmul(gy, pw.value.data(), tmp.data(), rows, out, in,
                          false, false);
          px.accumulate(tmp);
        }
        if (pw.requires_grad) {
          Tensor tmp({out, in});
          kernels::matmul(gy, px.value.data(), tmp.data(), out, rows, in, true,
                          false);
          pw.accumulate(tmp);
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          Tensor& g = self.parents[2]->ensure_grad();
          for (int r = 0; r < rows; ++r)
            for (int o = 0; o < out; ++o)
              g[o] += gy[static_cast<std::int64_t>(r) * out + o];
        }
      },
      "linear");
}

Var add_matrix_bias(const Var& x, const Var& m) {
  const Tensor& tx = x.value();
  const Tensor& tm = m.value();
  require(tx.ndim() == 3 && tm.ndim() == 2, "add_matrix_bias: rank");
  require(tx.dim(1) == tm.dim(0) && tx.dim(2) == tm.dim(1),
          "add_matrix_bias: shape mismatch");
  int b = tx.dim(0);
  std::int64_t inner = tm.numel();
  Tensor y(tx.shape());
  for (int i = 0; i < b; ++i)
    for (std::int64_t j = 0; j < inner; ++j)
      y[static_cast<std::int64_t>(i) * inner + j] =
          tx[static_cast<std::int64_t>(i) * inner + j] + tm[j];
  return make_node(std::move(y), {x, m},
                   [b, inner](Node& self) {
                     Node& px = *self.parents[0];
                     Node& pm = *self.parents[1];
                     if (px.requires_grad) px.accumulate(self.grad);
                     if (pm.requires_grad) {
                       Tensor& g = pm.ensure_grad();
                       for (int i = 0; i < b; ++i)
                         for (std::int64_t j = 0; j < inner; ++j)
                           g[j] += self.grad[static_cast<std::int64_t>(i) * inner + j];
                     }
                   },
                   "add_matrix_bias");
}

Var channel_affine(const Var& x, const Var& gamma, const Var& beta) {
  const Tensor& tx = x.value();
  require(tx.ndim() == 4, "channel_affine: rank");
  int n = tx.dim(0), c = tx.dim(1);
  std::int64_t hw = static_cast<std::int64_t>(tx.dim(2)) * tx.dim(3);
  require(gamma.value().numel() == c && beta.value().numel() == c,
          "channel_affine: parameter shape");
  Tensor y(tx.shape());
  for (int img = 0; img < n; ++img)
    for (int ch = 0; ch < c; ++ch) {
      std::int64_t base = (static_cast<std::int64_t>(img) * c + ch) * hw;
      float gm = gamma.value()[ch], bt = beta.value()[ch];
      for (std::int64_t i = 0; i < hw; ++i) y[base + i] = tx[base + i] * gm + bt;
    }
  return make_node(
      std::move(y), {x, gamma, beta},
      [n, c, hw](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        const Tensor& gy = self.grad;
        if (px.requires_grad) {
          Tensor& g = px.ensure_grad();
          for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
              std::int64_t base = (static_cast<std::int64_t>(img) * c + ch) * hw;
              float gm = pg.value[ch];
              for (std::int64_t i = 0; i < hw; ++i)
                g[base + i] += gy[base + i] * gm;
            }
        }
        if (pg.requires_grad) {
          Tensor& g = pg.ensure_grad();
          for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
              std::int64_t base = (static_cast<std::int64_t>(img) * c + ch) * hw;
              double acc = 0.0;
              for (std::int64_t i = 0; i < hw; ++i)
                acc += static_cast<double>(gy[base + i]) * px.value[base + i];
              g[ch] += static_cast<float>(acc);
            }
        }
        if (pb.requires_grad) {
          Tensor& g = pb.ensure_grad();
          for (int img = 0; img < n; ++img)
            for (int ch = 0; ch < c; ++ch) {
              std::int64_t base = (static_cast<std::int64_t>(img) * c + ch) * hw;
              double acc = 0.0;
              for (std::int64_t i = 0; i < hw; ++i) acc += gy[base + i];
              g[ch] += static_cast<float>(acc);
            }
        }
      },
      "channel_affine");
}

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Tensor& tx = x.value();
  const Tensor& tw = w.value();
  require(tx.ndim() == 4 && tw.ndim() == 4, "conv2d: rank");
  int n = tx.dim(0), cin = tx.dim(1), h = tx.dim(2), win = tx.dim(3);
  int cout = tw.dim(0), kh = tw.dim(2), kw = tw.dim(3);
  require(tw.dim(1) == cin, "conv2d: channel mismatch");
  int ho = kd::conv_out(h, kh, stride, pad);
  int wo = kd::conv_out(win, kw, stride, pad);
  require(ho > 0 && wo > 0, "conv2d: empty output");
  Tensor y({n, cout, ho, wo});
  kernels::conv2d_forward(tx.data(), tw.data(),
                          b.defined() ? b.value().data() : nullptr, y.data(),
                          n, cin, h, win, cout, kh, kw, stride, pad);
  std::vector<Var> parents = {x, w};
  if (b.defined()) parents.push_back(b);
  return make_node(
      std::move(y), std::move(parents),
      [n, cin, h, win, cout, kh, kw, stride, pad](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const float* gy = self.grad.data();
        if (px.requires_grad) {
          Tensor tmp(px.value.shape());
          kernels::conv2d_grad_input(gy, pw.value.data(), tmp.data(), n, cin,
                                     h, win, cout, kh, kw, stride, pad);
          px.accumulate(tmp);
        }
        bool wants_bias =
            self.parents.size() > 2 && self.parents[2]->requires_grad;
        if (pw.requires_grad || wants_bias) {
          Tensor gw(pw.value.shape());
          Tensor gb({cout});
          kernels::conv2d_grad_weight(px.value.data(), gy, gw.data(),
                                      wants_bias ? gb.data() : nullptr, n, cin,
                                      h, win, cout, kh, kw, stride, pad);
          if (pw.requires_grad) pw.accumulate(gw);
          if (wants_bias) self.parents[2]->accumulate(gb);
        }
      },
      "conv2d");
}

Var group_norm(const Var& x, int groups, float eps) {
  const Tensor& tx = x.value();
  require(tx.ndim() == 4, "group_norm: rank");
  int n = tx.dim(0), c = tx.dim(1);
  int hw = tx.dim(2) * tx.dim(3);
  if (c % groups != 0) throw ConfigError("group_norm: channels % groups != 0");
  Tensor y(tx.shape());
  Tensor mean({n, groups}), rstd({n, groups});
  kernels::group_norm_forward(tx.data(), y.data(), mean.data(), rstd.data(),
                              n, c, hw, groups, eps);
  return make_node(
      std::move(y), {x},
      [n, c, hw, groups, mean = std::move(mean),
       rstd = std::move(rstd)](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        Tensor tmp(p.value.shape());
        kernels::group_norm_backward(p.value.data(), self.grad.data(),
                                     mean.data(), rstd.data(), tmp.data(), n,
                                     c, hw, groups);
        p.accumulate(tmp);
      },
      "group_norm");
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, float eps) {
  const Tensor& tx = x.value();
  int d = tx.dim(tx.ndim() - 1);
  require(gamma.value().numel() == d && beta.value().numel() == d,
          "layer_norm: parameter shape");
  std::int64_t rows = tx.numel() / d;
  Tensor y(tx.shape());
  Tensor mean({static_cast<int>(rows)}), rstd({static_cast<int>(rows)});
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* xr = tx.data() + r * d;
    double mu = 0.0;
    for (int i = 0; i < d; ++i) mu += xr[i];
    mu /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) {
      double dd = xr[i] - mu;
      var += dd * dd;
    }
    var /= d;
    double rs = 1.0 / std::sqrt(var + eps);
    mean[r] = static_cast<float>(mu);
    rstd[r] = static_cast<float>(rs);
    float* yr = y.data() + r * d;
    for (int i = 0; i < d; ++i)
      yr[i] = static_cast<float>((xr[i] - mu) * rs) * gamma.value()[i] +
              beta.value()[i];
  }
  return make_node(
      std::move(y), {x, gamma, beta},
      [rows, d, mean = std::move(mean), rstd = std::move(rstd)](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        const Tensor& gy = self.grad;
        Tensor* gxp = nullptr;
        if (px.requires_grad) gxp = &px.ensure_grad();
        Tensor* ggp = pg.requires_grad ? &pg.ensure_grad() : nullptr;
        Tensor* gbp = pb.requires_grad ? &pb.ensure_grad() : nullptr;
        for (std::int64_t r = 0; r < rows; ++r) {
          const float* xr = px.value.data() + r * d;
          const float* gyr = gy.data() + r * d;
          float mu = mean[r], rs = rstd[r];
          double s1 = 0.0, s2 = 0.0;
          for (int i = 0; i < d; ++i) {
            float xhat = (xr[i] - mu) * rs;
            float gh = gyr[i] * pg.value[i];
            s1 += gh;
            s2 += static_cast<double>(gh) * xhat;
            if (ggp) (*ggp)[i] += gyr[i] * xhat;
            if (gbp) (*gbp)[i] += gyr[i];
          }
          if (gxp) {
            s1 /= d;
            s2 /= d;
            float* gxr = gxp->data() + r * d;
            for (int i = 0; i < d; ++i) {
              float xhat = (xr[i] - mu) * rs;
              float gh = gyr[i] * pg.value[i];
              gxr[i] += static_cast<float>(
                  rs * (gh - s1 - xhat * s2));
            }
          }
        }
      },
      "layer_norm");
}

Var upsample_nearest(const Var& x, int factor) {
  const Tensor& tx = x.value();
  require(tx.ndim() == 4, "upsample_nearest: rank");
  int n = tx.dim(0), c = tx.dim(1), h = tx.dim(2), w = tx.dim(3);
  Tensor y({n, c, h * factor, w * factor});
  kernels::upsample_nearest(tx.data(), y.data(), n, c, h, w, factor);
  return make_node(std::move(y), {x},
                   [n, c, h, w, factor](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor tmp(p.value.shape());
                     kernels::upsample_nearest_grad(self.grad.data(),
                                                    tmp.data(), n, c, h, w,
                                                    factor);
                     p.accumulate(tmp);
                   },
                   "upsample_nearest");
}

Var softmax_lastdim(const Var& x) {
  const Tensor& tx = x.value();
  int cols = tx.dim(tx.ndim() - 1);
  std::int64_t rows = tx.numel() / cols;
  Tensor y(tx.shape());
  kernels::softmax_rows(tx.data(), y.data(), rows, cols);
  return make_node(std::move(y), {x},
                   [rows, cols](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor tmp(p.value.shape());
                     kernels::softmax_rows_grad(self.value.data(),
                                                self.grad.data(), tmp.data(),
                                                rows, cols);
                     p.accumulate(tmp);
                   },
                   "softmax_lastdim");
}

Var gather_rows(const Var& table, std::vector<int> rows) {
  const Tensor& tt = table.value();
  require(tt.ndim() == 2, "gather_rows: rank");
  int r = tt.dim(0), d = tt.dim(1);
  for (int idx : rows)
    if (idx < 0 || idx >= r)
      throw ValidationError("gather_rows: index out of range");
  Tensor y({static_cast<int>(rows.size()), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(y.data() + static_cast<std::int64_t>(i) * d,
                tt.data() + static_cast<std::int64_t>(rows[i]) * d,
                static_cast<std::size_t>(d) * sizeof(float));
  return make_node(std::move(y), {table},
                   [rows = std::move(rows), d](Node& self) {
                     Node& p = *self.parents[0];
                     if (!p.requires_grad) return;
                     Tensor& g = p.ensure_grad();
                     for (std::size_t i = 0; i < rows.size(); ++i) {
                       const float* src =
                           self.grad.data() + static_cast<std::int64_t>(i) * d;
                       float* dst =
                           g.data() + static_cast<std::int64_t>(rows[i]) * d;
                       for (int j = 0; j < d; ++j) dst[j] += src[j];
                     }
                   },
                   "gather_rows");
}

Var cross_entropy_rows(const Var& logits, std::vector<int> targets,
                       std::vector<std::uint8_t> row_mask) {
  const Tensor& tl = logits.value();
  require(tl.ndim() == 2, "cross_entropy_rows: rank");
  std::int64_t rows = tl.dim(0);
  int cols = tl.dim(1);
  require(static_cast<std::int64_t>(targets.size()) == rows,
          "cross_entropy_rows: target count");
  bool all = row_mask.empty();
  if (!all)
    require(static_cast<std::int64_t>(row_mask.size()) == rows,
            "cross_entropy_rows: mask size");
  std::int64_t selected = 0;
  Tensor probs({static_cast<int>(rows), cols});
  double loss = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    if (!all && !row_mask[static_cast<std::size_t>(r)]) continue;
    int t = targets[static_cast<std::size_t>(r)];
    if (t < 0 || t >= cols)
      throw ValidationError("cross_entropy_rows: target out of range");
    kd::softmax_row(tl.data() + r * cols, probs.data() + r * cols, cols);
    double p = probs[r * cols + t];
    loss -= std::log(p > 1e-30 ? p : 1e-30);
    ++selected;
  }
  if (selected == 0) throw ArgumentError("cross_entropy_rows: empty selection");
  loss /= static_cast<double>(selected);
  return make_node(
      Tensor::scalar(static_cast<float>(loss)), {logits},
      [targets = std::move(targets), row_mask = std::move(row_mask),
       probs = std::move(probs), rows, cols, selected](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        Tensor& g = p.ensure_grad();
        bool all = row_mask.empty();
        float c = self.grad[0] / static_cast<float>(selected);
        for (std::int64_t r = 0; r < rows; ++r) {
          if (!all && !row_mask[static_cast<std::size_t>(r)]) continue;
          int t = targets[static_cast<std::size_t>(r)];
          for (int j = 0; j < cols; ++j)
            g[r * cols + j] +=
                c * (probs[r * cols + j] - (j == t ? 1.0f : 0.0f));
        }
      },
      "cross_entropy_rows");
}

}  // namespace movq::nn
