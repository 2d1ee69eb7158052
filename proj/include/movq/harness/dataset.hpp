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

#ifndef MOVQ_HARNESS_DATASET_HPP_
#define MOVQ_HARNESS_DATASET_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "movq/core/rng.hpp"
#include "movq/core/tensor.hpp"

namespace movq::harness {

/// One procedurally generated (3, size, size) image in [-1, 1]: a gradient,
/// disc, checkerboard, or stripe pattern with random colors and placement.
Tensor synthetic_image(Rng& rng, int size);

/// In-memory image corpus. `source` is either a directory of PNG files or
/// the built-in procedural set "synthetic:<count>". Folder images are
/// center-cropped and resized to `image_size`; unreadable files are skipped
/// with a warning on `warnings` (stderr when null). An empty corpus is a
/// configuration error.
class Dataset {
 public:
  Dataset(const std::string& source, int image_size, std::uint64_t seed,
          std::ostream* warnings = nullptr);

  int size() const { return static_cast<int>(images_.size()); }
  int image_size() const { return image_size_; }
  const Tensor& image(int i) const { return images_.at(i); }

  /// Stacks the listed images into one (n, 3, size, size) batch.
  Tensor stack(const std::vector<int>& ids) const;

  /// All image indices in storage order.
  std::vector<int> all_ids() const;

 private:
  int image_size_;
  std::vector<Tensor> images_;
};

/// Seed-deterministic batch iterator over a fixed id list: each epoch is a
/// fresh shuffle split into ceil(n / batch) batches with a short tail batch.
/// `start_batch` fast-forwards a resumed run to its next batch.
class BatchCursor {
 public:
  BatchCursor(std::vector<int> ids, int batch, std::uint64_t seed,
              std::int64_t start_batch = 0);

  std::vector<int> next();

 private:
  std::vector<int> ids_;
  std::vector<int> order_;
  int batch_;
  std::uint64_t seed_;
  std::int64_t global_;
  std::int64_t epoch_ = -1;
};

}  // namespace movq::harness

#endif  // MOVQ_HARNESS_DATASET_HPP_
