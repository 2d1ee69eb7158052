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

#ifndef MOVQ_IO_IMAGE_HPP_
#define MOVQ_IO_IMAGE_HPP_

#include <string>
#include <vector>

#include "movq/core/tensor.hpp"

namespace movq::io {

/// Decodes a PNG file into a (3, h, w) tensor with values in [-1, 1].
/// Grayscale, palette, 16-bit, and alpha inputs are normalized to RGB8
/// before mapping. Throws FormatError if the file is missing or not a
/// readable PNG.
Tensor read_png(const std::string& path);

/// Encodes a (3, h, w) or (1, h, w) tensor with values in [-1, 1] to an
/// 8-bit RGB PNG; values outside the range are clamped. Throws
/// ArgumentError on an unsupported shape and FormatError on I/O failure.
void write_png(const std::string& path, const Tensor& image);

/// Center-crops an image tensor (c, h, w) to a square and bilinearly
/// resizes it to (c, size, size). Throws ArgumentError if size < 1 or the
/// input is not an image tensor.
Tensor center_crop_resize(const Tensor& image, int size);

/// Lays out same-shaped image tensors left-to-right, top-to-bottom in a
/// grid with the given column count and a 2-pixel white gutter. Throws
/// ArgumentError on an empty list, mismatched shapes, or cols < 1.
Tensor tile_grid(const std::vector<Tensor>& images, int cols);

}  // namespace movq::io

#endif  // MOVQ_IO_IMAGE_HPP_
