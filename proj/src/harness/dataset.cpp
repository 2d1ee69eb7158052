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

#include "movq/harness/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "movq/core/error.hpp"
#include "movq/io/image.hpp"

namespace movq::harness {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kOrderStreamBase = std::uint64_t{1} << 32;

void shuffle_ids(std::vector<int>* ids, Rng rng) {
  for (int i = static_cast<int>(ids->size()) - 1; i > 0; --i) {
    int j = rng.below(i + 1);
    std::swap((*ids)[i], (*ids)[j]);
  }
}

struct Color {
  float r, g, b;
};

Color random_color(Rng& rng) {
  return {static_cast<float>(rng.uniform(-1.0, 1.0)),
          static_cast<float>(rng.uniform(-1.0, 1.0)),
          static_cast<float>(rng.uniform(-1.0, 1.0))};
}

void paint(Tensor* img, int size, int y, int x, const Color& c) {
  std::int64_t plane = static_cast<std::int64_t>(size) * size;
  std::int64_t at = static_cast<std::int64_t>(y) * size + x;
  (*img)[at] = c.r;
  (*img)[plane + at] = c.g;
  (*img)[2 * plane + at] = c.b;
}

Color lerp(const Color& a, const Color& b, float t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t,
          a.b + (b.b - a.b) * t};
}

bool is_png_name(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

}  // namespace

Tensor synthetic_image(Rng& rng, int size) {
  if (size < 1) throw ArgumentError("synthetic_image: size must be positive");
  Tensor img({3, size, size});
  Color c0 = random_color(rng);
  Color c1 = random_color(rng);
  int kind = rng.below(4);
  float inv = 1.0f / static_cast<float>(std::max(size - 1, 1));
  switch (kind) {
    case 0: {  // linear two-color gradient at a random angle
      double theta = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      float dx = static_cast<float>(std::cos(theta));
      float dy = static_cast<float>(std::sin(theta));
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          float t = 0.5f + 0.5f * (dx * (x * inv - 0.5f) * 2.0f +
                                   dy * (y * inv - 0.5f) * 2.0f);
          paint(&img, size, y, x, lerp(c0, c1, std::clamp(t, 0.0f, 1.0f)));
        }
      break;
    }
    case 1: {  // filled disc on a flat background
      float cy = static_cast<float>(rng.uniform(0.2, 0.8)) * size;
      float cx = static_cast<float>(rng.uniform(0.2, 0.8)) * size;
      float radius = static_cast<float>(rng.uniform(0.15, 0.4)) * size;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          float d = std::hypot(y + 0.5f - cy, x + 0.5f - cx);
          float t = std::clamp(radius - d + 0.5f, 0.0f, 1.0f);
          paint(&img, size, y, x, lerp(c1, c0, t));
        }
      break;
    }
    case 2: {  // checkerboard
      int period = 4 << rng.below(3);
      int py = rng.below(period);
      int px = rng.below(period);
      int half = period / 2;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          bool a = ((y + py) % period) < half;
          bool b = ((x + px) % period) < half;
          paint(&img, size, y, x, (a == b) ? c0 : c1);
        }
      break;
    }
    default: {  // stripes
      bool horizontal = rng.below(2) == 0;
      int period = 2 << rng.below(3);
      int phase = rng.below(period);
      int half = period / 2;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          int u = horizontal ? y : x;
          paint(&img, size, y, x, ((u + phase) % period) < half ? c0 : c1);
        }
      break;
    }
  }
  return img;
}

Dataset::Dataset(const std::string& source, int image_size, std::uint64_t seed,
                 std::ostream* warnings) : image_size_(image_size) {
  if (image_size < 1)
    throw ConfigError("dataset: image size must be positive");
  std::ostream& warn = warnings != nullptr ? *warnings : std::cerr;
  const std::string prefix = "synthetic:";
  if (source.rfind(prefix, 0) == 0) {
    int count = 0;
    try {
      std::size_t used = 0;
      count = std::stoi(source.substr(prefix.size()), &used);
      if (used != source.size() - prefix.size()) count = 0;
    } catch (const std::exception&) {
      count = 0;
    }
    if (count < 1)
      throw ConfigError("dataset: '" + source +
                        "' needs a positive image count");
    Rng base(seed);
    images_.reserve(count);
    for (int i = 0; i < count; ++i) {
      Rng stream = base.child(static_cast<std::uint64_t>(i));
      images_.push_back(synthetic_image(stream, image_size));
    }
    return;
  }

  if (!fs::is_directory(source))
    throw ConfigError("dataset: '" + source +
                      "' is neither a directory nor synthetic:<count>");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(source))
    if (entry.is_regular_file() && is_png_name(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    try {
      Tensor img = io::read_png(path.string());
      images_.push_back(io::center_crop_resize(img, image_size));
    } catch (const FormatError& e) {
      warn << "warning: skipping " << path.string() << ": " << e.what()
           << "\n";
    }
  }
  if (images_.empty())
    throw ConfigError("dataset: '" + source + "' has no readable images");
}

Tensor Dataset::stack(const std::vector<int>& ids) const {
  if (ids.empty()) throw ArgumentError("dataset: empty batch");
  Tensor out({static_cast<int>(ids.size()), 3, image_size_, image_size_});
  std::int64_t per = static_cast<std::int64_t>(3) * image_size_ * image_size_;
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::memcpy(out.data() + static_cast<std::int64_t>(i) * per,
                image(ids[i]).data(), sizeof(float) * per);
  return out;
}

std::vector<int> Dataset::all_ids() const {
  std::vector<int> ids(images_.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

BatchCursor::BatchCursor(std::vector<int> ids, int batch, std::uint64_t seed,
                         std::int64_t start_batch)
    : ids_(std::move(ids)), batch_(batch), seed_(seed), global_(start_batch) {
  if (ids_.empty()) throw ArgumentError("batch cursor: empty id list");
  if (batch_ < 1) throw ArgumentError("batch cursor: batch size must be >= 1");
  if (global_ < 0) throw ArgumentError("batch cursor: negative start batch");
}

std::vector<int> BatchCursor::next() {
  std::int64_t n = static_cast<std::int64_t>(ids_.size());
  std::int64_t per_epoch = (n + batch_ - 1) / batch_;
  std::int64_t epoch = global_ / per_epoch;
  std::int64_t slot = global_ % per_epoch;
  if (epoch != epoch_) {
    order_ = ids_;
    shuffle_ids(&order_, Rng(seed_).child(
                             kOrderStreamBase +
                             static_cast<std::uint64_t>(epoch)));
    epoch_ = epoch;
  }
  std::int64_t start = slot * batch_;
  std::int64_t stop = std::min(start + batch_, n);
  ++global_;
  return std::vector<int>(order_.begin() + start, order_.begin() + stop);
}

}  // namespace movq::harness
