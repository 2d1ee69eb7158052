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

#ifndef MOVQ_NN_GRAPH_HPP_
#define MOVQ_NN_GRAPH_HPP_

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "movq/core/tensor.hpp"

// Reverse-mode tape. Every operation records a node holding its value, its
// parents, and a closure that routes the node's gradient to the parents.
// Nodes whose inputs all have requires_grad == false are created parentless,
// so pure inference never retains a graph.

namespace movq::nn {

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;
  const char* op_name = "leaf";

  bool has_grad() const { return !grad.empty(); }

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
  }

  void accumulate(const Tensor& g) {
    Tensor& dst = ensure_grad();
    const float* src = g.data();
    float* out = dst.data();
    std::int64_t n = dst.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] += src[i];
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Var leaf(Tensor value, bool requires_grad = false) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = requires_grad;
    return Var(std::move(n));
  }

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  bool has_grad() const { return node_ && node_->has_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  void zero_grad() {
    if (node_) node_->grad = Tensor();
  }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Records an op node. Parents without requires_grad anywhere collapse the
/// node to a constant leaf.
Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backprop, const char* op_name);

/// Backpropagates from a scalar root (seed gradient 1).
void backward(const Var& root);

}  // namespace movq::nn

#endif  // MOVQ_NN_GRAPH_HPP_
