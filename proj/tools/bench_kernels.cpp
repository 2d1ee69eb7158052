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

// Compares the serial reference kernels against the OpenMP versions and
// checks that both produce identical bytes.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <vector>

#include "movq/core/rng.hpp"
#include "movq/kernels/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm-up
  auto t0 = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<float> random_vec(movq::Rng& rng, std::int64_t n) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

struct Case {
  const char* name;
  std::function<void()> serial_fn;
  std::function<void()> parallel_fn;
  std::function<bool()> identical;
  int reps;
};

}  // namespace

int main() {
  namespace k = movq::kernels;
  movq::Rng rng(42);

  std::printf("threads available: %d (parallel backend %s)\n",
              k::thread_count(),
              k::parallel_available() ? "enabled" : "OpenMP not compiled in");

  const int m = 256, kk = 256, n = 256;
  auto a = random_vec(rng, static_cast<std::int64_t>(m) * kk);
  auto b = random_vec(rng, static_cast<std::int64_t>(kk) * n);
  std::vector<float> c_s(static_cast<std::size_t>(m) * n);
  std::vector<float> c_p(c_s.size());

  const int img_n = 4, cin = 32, h = 32, cout = 32;
  auto cx = random_vec(rng, static_cast<std::int64_t>(img_n) * cin * h * h);
  auto cw = random_vec(rng, static_cast<std::int64_t>(cout) * cin * 9);
  auto cb = random_vec(rng, cout);
  std::vector<float> cy_s(static_cast<std::size_t>(img_n) * cout * h * h);
  std::vector<float> cy_p(cy_s.size());

  const int cells = 1024, chunks = 4, code_dim = 16, codes = 512;
  auto z = random_vec(rng, static_cast<std::int64_t>(cells) * chunks * code_dim);
  auto book = random_vec(rng, static_cast<std::int64_t>(codes) * code_dim);
  std::vector<int> idx_s(static_cast<std::size_t>(cells) * chunks);
  std::vector<int> idx_p(idx_s.size());

  const std::int64_t rows = 4096;
  const int cols = 512;
  auto sx = random_vec(rng, rows * cols);
  std::vector<float> sy_s(static_cast<std::size_t>(rows) * cols);
  std::vector<float> sy_p(sy_s.size());

  std::vector<Case> cases = {
      {"matmul 256^3",
       [&] { k::serial::matmul(a.data(), b.data(), c_s.data(), m, kk, n, false, false); },
       [&] { k::parallel::matmul(a.data(), b.data(), c_p.data(), m, kk, n, false, false); },
       [&] { return std::memcmp(c_s.data(), c_p.data(), c_s.size() * 4) == 0; },
       10},
      {"conv3x3 4x32x32x32",
       [&] {
         k::serial::conv2d_forward(cx.data(), cw.data(), cb.data(), cy_s.data(),
                                   img_n, cin, h, h, cout, 3, 3, 1, 1);
       },
       [&] {
         k::parallel::conv2d_forward(cx.data(), cw.data(), cb.data(),
                                     cy_p.data(), img_n, cin, h, h, cout, 3, 3,
                                     1, 1);
       },
       [&] { return std::memcmp(cy_s.data(), cy_p.data(), cy_s.size() * 4) == 0; },
       10},
      {"code scan 1024x4 over 512",
       [&] {
         k::serial::nearest_code_scan(z.data(), book.data(), cells, chunks,
                                      code_dim, codes, idx_s.data());
       },
       [&] {
         k::parallel::nearest_code_scan(z.data(), book.data(), cells, chunks,
                                        code_dim, codes, idx_p.data());
       },
       [&] {
         return std::memcmp(idx_s.data(), idx_p.data(),
                            idx_s.size() * sizeof(int)) == 0;
       },
       10},
      {"softmax 4096x512",
       [&] { k::serial::softmax_rows(sx.data(), sy_s.data(), rows, cols); },
       [&] { k::parallel::softmax_rows(sx.data(), sy_p.data(), rows, cols); },
       [&] { return std::memcmp(sy_s.data(), sy_p.data(), sy_s.size() * 4) == 0; },
       10},
  };

  std::printf("%-28s %12s %12s %9s %6s\n", "kernel", "serial ms", "parallel ms",
              "speedup", "match");
  bool all_match = true;
  for (auto& c : cases) {
    double ts = time_ms(c.serial_fn, c.reps);
    double tp = time_ms(c.parallel_fn, c.reps);
    bool ok = c.identical();
    all_match = all_match && ok;
    std::printf("%-28s %12.3f %12.3f %8.2fx %6s\n", c.name, ts, tp, ts / tp,
                ok ? "yes" : "NO");
  }
  return all_match ? 0 : 1;
}
