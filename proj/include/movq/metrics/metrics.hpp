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

#ifndef MOVQ_METRICS_METRICS_HPP_
#define MOVQ_METRICS_METRICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "movq/core/tensor.hpp"

namespace movq::metrics {

// Images are float tensors in [-1, 1] whose last two dimensions are H x W;
// leading dimensions are folded into channels.

double mse(const Tensor& x, const Tensor& y);

// 10*log10(peak^2 / MSE) with peak 2, capped at 100 dB when MSE < 1e-10.
double psnr(const Tensor& x, const Tensor& y);

// Mean local SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// dynamic range 2, windows wrap circularly, averaged over all positions and
// channels. Requires H, W >= 11.
double ssim(const Tensor& x, const Tensor& y);

// Mean per-pixel MSE over all unordered sample pairs; needs >= 2 samples.
double diversity(const std::vector<Tensor>& samples);

struct MetricsReport {
  double psnr = 0.0;
  double ssim = 0.0;
  double mse = 0.0;
  double codebook_usage = 0.0;
  double perplexity = 0.0;
  std::int64_t sample_count = 0;
};

// One record of flat key=value lines.
std::string format_report(const MetricsReport& report);

}  // namespace movq::metrics

#endif  // MOVQ_METRICS_METRICS_HPP_
