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

#include "movq/metrics/metrics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "movq/core/error.hpp"

namespace movq::metrics {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kRange = 2.0;
constexpr double kC1 = (0.01 * kRange) * (0.01 * kRange);
constexpr double kC2 = (0.03 * kRange) * (0.03 * kRange);

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    double d = i - (kWindow - 1) / 2.0;
    taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

void require_pair(const Tensor& x, const Tensor& y, const char* op) {
  if (!x.same_shape(y))
    throw ArgumentError(std::string(op) + ": shape mismatch");
  if (x.ndim() < 2) throw ArgumentError(std::string(op) + ": not an image");
}

// Circular horizontal then vertical Gaussian filtering of one channel.
void blur(const std::vector<double>& src, std::vector<double>* tmp,
          std::vector<double>* dst, int h, int w,
          const std::array<double, kWindow>& taps) {
  const int r = kWindow / 2;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int t = 0; t < kWindow; ++t) {
        int jj = j + t - r;
        jj %= w;
        if (jj < 0) jj += w;
        acc += taps[static_cast<std::size_t>(t)] *
               src[static_cast<std::size_t>(i) * w + jj];
      }
      (*tmp)[static_cast<std::size_t>(i) * w + j] = acc;
    }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int t = 0; t < kWindow; ++t) {
        int ii = i + t - r;
        ii %= h;
        if (ii < 0) ii += h;
        acc += taps[static_cast<std::size_t>(t)] *
               (*tmp)[static_cast<std::size_t>(ii) * w + j];
      }
      (*dst)[static_cast<std::size_t>(i) * w + j] = acc;
    }
}

}  // namespace

double mse(const Tensor& x, const Tensor& y) {
  require_pair(x, y, "mse");
  double acc = 0.0;
  std::int64_t n = x.numel();
  for (std::int64_t i = 0; i < n; ++i) {
    double d = static_cast<double>(x[i]) - y[i];
    acc += d * d;
  }
  return acc / static_cast<double>(n);
}

double psnr(const Tensor& x, const Tensor& y) {
  require_pair(x, y, "psnr");
  double err = mse(x, y);
  if (err < 1e-10) return 100.0;
  return 10.0 * std::log10(kRange * kRange / err);
}

double ssim(const Tensor& x, const Tensor& y) {
  require_pair(x, y, "ssim");
  int w = x.dim(x.ndim() - 1);
  int h = x.dim(x.ndim() - 2);
  if (h < kWindow || w < kWindow)
    throw ArgumentError("ssim: image smaller than the 11x11 window");
  std::int64_t channels = x.numel() / (static_cast<std::int64_t>(h) * w);
  auto taps = gaussian_taps();

  std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<double> xs(plane), ys(plane), xx(plane), yy(plane), xy(plane);
  std::vector<double> tmp(plane), mx(plane), my(plane), mxx(plane), myy(plane),
      mxy(plane);
  double total = 0.0;
  for (std::int64_t ch = 0; ch < channels; ++ch) {
    const float* px = x.data() + ch * static_cast<std::int64_t>(plane);
    const float* py = y.data() + ch * static_cast<std::int64_t>(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      xs[i] = px[i];
      ys[i] = py[i];
      xx[i] = xs[i] * xs[i];
      yy[i] = ys[i] * ys[i];
      xy[i] = xs[i] * ys[i];
    }
    blur(xs, &tmp, &mx, h, w, taps);
    blur(ys, &tmp, &my, h, w, taps);
    blur(xx, &tmp, &mxx, h, w, taps);
    blur(yy, &tmp, &myy, h, w, taps);
    blur(xy, &tmp, &mxy, h, w, taps);
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      double vx = mxx[i] - mx[i] * mx[i];
      double vy = myy[i] - my[i] * my[i];
      double cov = mxy[i] - mx[i] * my[i];
      double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2);
      double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
      acc += num / den;
    }
    total += acc / static_cast<double>(plane);
  }
  return total / static_cast<double>(channels);
}

double diversity(const std::vector<Tensor>& samples) {
  if (samples.size() < 2)
    throw ArgumentError("diversity: need at least two samples");
  double acc = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      acc += mse(samples[i], samples[j]);
      ++pairs;
    }
  return acc / pairs;
}

std::string format_report(const MetricsReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "psnr=" << report.psnr << "\n"
     << "ssim=" << report.ssim << "\n"
     << "mse=" << report.mse << "\n"
     << "codebook_usage=" << report.codebook_usage << "\n"
     << "perplexity=" << report.perplexity << "\n"
     << "sample_count=" << report.sample_count << "\n";
  return os.str();
}

}  // namespace movq::metrics
