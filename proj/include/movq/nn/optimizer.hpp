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

#ifndef MOVQ_NN_OPTIMIZER_HPP_
#define MOVQ_NN_OPTIMIZER_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "movq/nn/checkpoint.hpp"
#include "movq/nn/params.hpp"

namespace movq::nn {

// Adam over the trainable entries of a ParamStore. Moments and the step
// counter round-trip through checkpoints so a resumed run continues the
// update sequence exactly.
class Adam {
 public:
  Adam(ParamStore* params, float lr, float beta1 = 0.9f, float beta2 = 0.95f,
       float eps = 1e-8f);

  void step();

  float lr() const { return lr_; }
  void set_lr(float lr) { lr_ = lr; }
  std::int64_t step_count() const { return step_; }

  void export_state(Checkpoint* ck) const;
  void import_state(const Checkpoint& ck);

 private:
  ParamStore* params_;
  float lr_, beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

}  // namespace movq::nn

#endif  // MOVQ_NN_OPTIMIZER_HPP_
