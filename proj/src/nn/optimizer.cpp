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

#include "movq/nn/optimizer.hpp"

#include <cmath>

#include "movq/core/error.hpp"

namespace movq::nn {

Adam::Adam(ParamStore* params, float lr, float beta1, float beta2, float eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step() {
  ++step_;
  float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(step_));
  float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(step_));
  for (const std::string& name : params_->names()) {
    Var p = params_->get(name);
    Node& node = *p.node();
    if (!node.requires_grad || !node.has_grad()) continue;
    Tensor& value = node.value;
    const Tensor& grad = node.grad;
    auto mit = m_.find(name);
    if (mit == m_.end()) {
      mit = m_.emplace(name, Tensor::zeros(value.shape())).first;
      v_.emplace(name, Tensor::zeros(value.shape()));
    }
    Tensor& m = mit->second;
    Tensor& v = v_.at(name);
    std::int64_t n = value.numel();
    for (std::int64_t i = 0; i < n; ++i) {
      float g = grad[i];
      m[i] = beta1_ * m[i] + (1.0f - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0f - beta2_) * g * g;
      float mhat = m[i] / bc1;
      float vhat = v[i] / bc2;
      value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::export_state(Checkpoint* ck) const {
  ck->config["opt.step"] = std::to_string(step_);
  for (const auto& [name, t] : m_) ck->arrays["opt.m." + name] = t;
  for (const auto& [name, t] : v_) ck->arrays["opt.v." + name] = t;
}

void Adam::import_state(const Checkpoint& ck) {
  auto it = ck.config.find("opt.step");
  if (it == ck.config.end())
    throw FormatError("checkpoint: missing optimizer step counter");
  step_ = std::stoll(it->second);
  m_.clear();
  v_.clear();
  for (const auto& [name, t] : ck.arrays) {
    if (name.rfind("opt.m.", 0) == 0) m_[name.substr(6)] = t;
    if (name.rfind("opt.v.", 0) == 0) v_[name.substr(6)] = t;
  }
}

}  // namespace movq::nn
