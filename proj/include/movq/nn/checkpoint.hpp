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

#ifndef MOVQ_NN_CHECKPOINT_HPP_
#define MOVQ_NN_CHECKPOINT_HPP_

#include <map>
#include <string>

#include "movq/core/tensor.hpp"

namespace movq::nn {

// Binary checkpoint archive: a string->string config block plus named float
// arrays, written little-endian so a reload restores every value bit-exactly.
struct Checkpoint {
  std::map<std::string, std::string> config;
  std::map<std::string, Tensor> arrays;

  bool has_array(const std::string& name) const {
    return arrays.find(name) != arrays.end();
  }
  const Tensor& array(const std::string& name) const;
  std::string config_value(const std::string& key) const;
  int config_int(const std::string& key) const;
  float config_float(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);

// Throws FormatError on bad magic, truncation, or a malformed record.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace movq::nn

#endif  // MOVQ_NN_CHECKPOINT_HPP_
