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

#include "movq/nn/graph.hpp"

#include <unordered_set>

#include "movq/core/error.hpp"

namespace movq::nn {

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(Node&)> backprop, const char* op_name) {
  bool needs = false;
  for (const Var& p : parents)
    if (p.requires_grad()) {
      needs = true;
      break;
    }
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->op_name = op_name;
  n->requires_grad = needs;
  if (needs) {
    n->parents.reserve(parents.size());
    for (Var& p : parents) n->parents.push_back(p.node());
    n->backprop = std::move(backprop);
  }
  return Var(std::move(n));
}

void backward(const Var& root) {
  if (!root.defined()) throw ArgumentError("backward: undefined variable");
  if (root.value().numel() != 1)
    throw ArgumentError("backward: root must be a scalar");
  Node* r = root.node().get();
  if (!r->requires_grad) return;

  // Iterative post-order over the parent DAG; reversed, it is a valid
  // topological order with every consumer before its producers.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(r, 0);
  visited.insert(r);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second)
        stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  r->ensure_grad();
  r->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->has_grad()) n->backprop(*n);
  }
}

}  // namespace movq::nn
