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

#include "movq/nn/params.hpp"

#include "movq/core/error.hpp"

namespace movq::nn {

Var ParamStore::create(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name))
    throw ArgumentError("ParamStore: duplicate parameter '" + name + "'");
  Var v = Var::leaf(std::move(init), trainable);
  order_.push_back(name);
  index_.emplace(name, v);
  return v;
}

Var ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : index_) v.zero_grad();
}

std::int64_t ParamStore::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& [name, v] : index_)
    if (v.node()->requires_grad) n += v.value().numel();
  return n;
}

void ParamStore::export_arrays(std::map<std::string, Tensor>* out) const {
  for (const auto& [name, v] : index_) (*out)[name] = v.value();
}

void ParamStore::import_arrays(const std::map<std::string, Tensor>& in) {
  for (auto& [name, v] : index_) {
    auto it = in.find(name);
    if (it == in.end())
      throw FormatError("checkpoint: missing array '" + name + "'");
    if (!it->second.same_shape(v.value()))
      throw FormatError("checkpoint: shape mismatch for '" + name + "'");
    v.node()->value = it->second;
  }
}

}  // namespace movq::nn
