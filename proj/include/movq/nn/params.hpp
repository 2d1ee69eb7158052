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

#ifndef MOVQ_NN_PARAMS_HPP_
#define MOVQ_NN_PARAMS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "movq/nn/graph.hpp"

namespace movq::nn {

// Named parameter registry for a model. Fixed entries (requires_grad=false)
// are saved and restored like trainable ones but skipped by the optimizer.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init, bool trainable = true);
  Var get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }
  const std::vector<std::string>& names() const { return order_; }

  void zero_grad();
  std::int64_t parameter_count() const;

  void export_arrays(std::map<std::string, Tensor>* out) const;
  // Throws FormatError if an entry is missing or has a different shape.
  void import_arrays(const std::map<std::string, Tensor>& in);

 private:
  std::vector<std::string> order_;
  std::map<std::string, Var> index_;
};

}  // namespace movq::nn

#endif  // MOVQ_NN_PARAMS_HPP_
