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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "movq/ae/autoencoder.hpp"
#include "movq/core/error.hpp"
#include "movq/core/rng.hpp"
#include "movq/nn/init.hpp"
#include "movq/nn/ops.hpp"

using movq::Rng;
using movq::Tensor;
using movq::nn::Var;
namespace ae = movq::ae;
namespace nn = movq::nn;

namespace {

ae::AutoencoderConfig tiny_config(ae::InitialFeatureKind kind) {
  ae::AutoencoderConfig cfg;
  cfg.image_size = 16;
  cfg.downsample_factor = 4;
  cfg.latent_dim = 8;
  cfg.chunks = 2;
  cfg.codebook_size = 8;
  cfg.base_width = 4;
  cfg.blocks_per_level = 1;
  cfg.modulated_levels = 3;
  cfg.initial_feature = kind;
  return cfg;
}

Var random_image(Rng& rng, int b, int size) {
  Tensor t({b, 3, size, size});
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-0.9, 0.9));
  return Var::leaf(t);
}

movq::vq::TokenGrid constant_grid(int h, int w, int c, int vocab, int index) {
  movq::vq::TokenGrid g;
  g.h = h;
  g.w = w;
  g.c = c;
  g.vocab = vocab;
  g.indices.assign(static_cast<std::size_t>(h) * w * c, index);
  return g;
}

}  // namespace

TEST_CASE("encode and decode shapes follow the downsample factor") {
  Rng rng(11);
  ae::AutoencoderConfig cfg = tiny_config(ae::InitialFeatureKind::kSinusoid);
  ae::Autoencoder model(cfg, rng);

  Var x = random_image(rng, 2, 16);
  Var z = model.encode(x);
  CHECK(z.value().dim(0) == 2);
  CHECK(z.value().dim(1) == 8);
  CHECK(z.value().dim(2) == 4);
  CHECK(z.value().dim(3) == 4);

  Var img = model.decode(Var::leaf(z.value()));
  CHECK(img.value().dim(0) == 2);
  CHECK(img.value().dim(1) == 3);
  CHECK(img.value().dim(2) == 16);
  CHECK(img.value().dim(3) == 16);
  for (std::int64_t i = 0; i < img.value().numel(); ++i) {
    CHECK(img.value()[i] >= -1.0f);
    CHECK(img.value()[i] <= 1.0f);
  }

  Tensor bad({1, 3, 18, 18});
  CHECK_THROWS_AS(model.encode(Var::leaf(bad)), movq::ConfigError);
  Tensor wrong_depth({1, 5, 4, 4});
  CHECK_THROWS_AS(model.decode(Var::leaf(wrong_depth)), movq::ConfigError);
}

TEST_CASE("group normalization statistics before the affine") {
  Rng rng(12);
  Tensor x = nn::normal_init(rng, {2, 8, 6, 6}, 1.7f);
  Var y = nn::group_norm(Var::leaf(x), 4, 1e-6f);
  for (int n = 0; n < 2; ++n)
    for (int g = 0; g < 4; ++g) {
      double mean = 0.0, var = 0.0;
      int count = 2 * 36;
      for (int c = g * 2; c < g * 2 + 2; ++c)
        for (int i = 0; i < 36; ++i)
          mean += y.value()[((n * 8 + c) * 36) + i];
      mean /= count;
      for (int c = g * 2; c < g * 2 + 2; ++c)
        for (int i = 0; i < 36; ++i) {
          double d = y.value()[((n * 8 + c) * 36) + i] - mean;
          var += d * d;
        }
      var /= count;
      CHECK(std::fabs(mean) <= 1e-4);
      CHECK(std::fabs(var - 1.0) <= 1e-3);
    }
}

TEST_CASE("identity affine maps reduce modulation to plain group norm") {
  Rng rng(13);
  int width = 6;
  ae::ModulationParams p;
  p.gamma_weight = Var::leaf(Tensor({width, 4, 1, 1}));
  p.gamma_bias = Var::leaf(Tensor::full({width}, 1.0f));
  p.beta_weight = Var::leaf(Tensor({width, 4, 1, 1}));
  p.beta_bias = Var::leaf(Tensor({width}));
  p.groups = 3;
  p.eps = 1e-6f;

  Var x = Var::leaf(nn::normal_init(rng, {2, width, 8, 8}, 1.0f));
  Var z = Var::leaf(nn::normal_init(rng, {2, 4, 4, 4}, 1.0f));
  Var modulated = ae::scn_modulate(x, z, p);
  Var plain = nn::group_norm(x, 3, 1e-6f);
  for (std::int64_t i = 0; i < plain.value().numel(); ++i)
    CHECK(std::fabs(modulated.value()[i] - plain.value()[i]) <= 1e-6f);
}

TEST_CASE("modulation statistics for a constant latent") {
  Rng rng(14);
  ae::ModulationParams p;
  p.gamma_weight = Var::leaf(nn::normal_init(rng, {1, 4, 1, 1}, 0.5f));
  p.gamma_bias = Var::leaf(Tensor::full({1}, 1.0f));
  p.beta_weight = Var::leaf(nn::normal_init(rng, {1, 4, 1, 1}, 0.5f));
  p.beta_bias = Var::leaf(Tensor::full({1}, 0.2f));
  p.groups = 1;
  p.eps = 1e-6f;

  Tensor z({1, 4, 5, 5});
  float cell[4] = {0.3f, -0.7f, 1.1f, 0.4f};
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 25; ++i) z[c * 25 + i] = cell[c];
  Var act = Var::leaf(nn::normal_init(rng, {1, 1, 5, 5}, 2.0f));
  Var out = ae::scn_modulate(act, Var::leaf(z), p);

  double expect_gamma = 1.0, expect_beta = 0.2;
  for (int c = 0; c < 4; ++c) {
    expect_gamma += p.gamma_weight.value()[c] * cell[c];
    expect_beta += p.beta_weight.value()[c] * cell[c];
  }
  double mean = 0.0, var = 0.0;
  for (int i = 0; i < 25; ++i) mean += out.value()[i];
  mean /= 25;
  for (int i = 0; i < 25; ++i) {
    double d = out.value()[i] - mean;
    var += d * d;
  }
  var /= 25;
  CHECK(mean == doctest::Approx(expect_beta).epsilon(1e-3));
  CHECK(std::sqrt(var) ==
        doctest::Approx(std::fabs(expect_gamma)).epsilon(1e-3));
}

TEST_CASE("modulation maps stay spatially constant for constant latents") {
  Rng rng(15);
  ae::ModulationParams p;
  p.gamma_weight = Var::leaf(nn::normal_init(rng, {3, 2, 1, 1}, 0.5f));
  p.gamma_bias = Var::leaf(Tensor::full({3}, 1.0f));
  p.beta_weight = Var::leaf(nn::normal_init(rng, {3, 2, 1, 1}, 0.5f));
  p.beta_bias = Var::leaf(Tensor({3}));
  p.groups = 1;
  p.eps = 1e-6f;

  Tensor z = Tensor::full({1, 2, 3, 3}, 0.6f);
  Var act = Var::leaf(nn::normal_init(rng, {1, 3, 6, 6}, 1.0f));
  Var normed = nn::group_norm(act, 1, 1e-6f);
  Var out = ae::scn_modulate(act, Var::leaf(z), p);
  // With constant gamma/beta per channel, out - gamma*normed is constant
  // over space in each channel.
  for (int c = 0; c < 3; ++c) {
    float gamma = 0.0f;
    for (int k = 0; k < 2; ++k) gamma += p.gamma_weight.value()[c * 2 + k] *
                                         0.6f;
    gamma += 1.0f;
    float ref = out.value()[c * 36] - gamma * normed.value()[c * 36];
    for (int i = 1; i < 36; ++i)
      CHECK(out.value()[c * 36 + i] - gamma * normed.value()[c * 36 + i] ==
            doctest::Approx(ref).epsilon(1e-4));
  }

  Tensor ragged({1, 2, 4, 3});
  CHECK_THROWS_AS(
      ae::scn_modulate(act, Var::leaf(ragged), p), movq::ConfigError);
}

TEST_CASE("initial feature kinds") {
  Rng rng(16);
  SUBCASE("fourier of a zero latent is all ones then all zeros") {
    Var basis = Var::leaf(nn::normal_init(rng, {4, 8, 1, 1}, 1.0f));
    Var z = Var::leaf(Tensor({2, 8, 3, 3}));
    Var f = ae::fourier_feature(z, basis);
    CHECK(f.value().dim(1) == 8);
    std::int64_t half = 2LL * 4 * 9;
    for (std::int64_t i = 0; i < f.value().numel(); ++i) {
      bool cos_half = (i / 9) % 8 < 4;
      CHECK(f.value()[i] == doctest::Approx(cos_half ? 1.0 : 0.0));
    }
    (void)half;
  }
  SUBCASE("sinusoid grid ignores the latent entirely") {
    ae::Autoencoder model(tiny_config(ae::InitialFeatureKind::kSinusoid), rng);
    Var z1 = Var::leaf(nn::normal_init(rng, {1, 8, 4, 4}, 1.0f));
    Var z2 = Var::leaf(nn::normal_init(rng, {1, 8, 4, 4}, 1.0f));
    Var f1 = model.initial_feature(z1);
    Var f2 = model.initial_feature(z2);
    CHECK(f1.value().dim(1) == 16);
    for (std::int64_t i = 0; i < f1.value().numel(); ++i)
      CHECK(f1.value()[i] == f2.value()[i]);
  }
  SUBCASE("unknown kind name is rejected") {
    CHECK_THROWS_AS(ae::parse_initial_feature_kind("perlin"),
                    movq::ConfigError);
    CHECK(ae::parse_initial_feature_kind("fourier") ==
          ae::InitialFeatureKind::kFourier);
  }
}

TEST_CASE("constant token grids still decode to spatially varying images") {
  Rng rng(17);
  for (ae::InitialFeatureKind kind : {ae::InitialFeatureKind::kFourier,
                                      ae::InitialFeatureKind::kSinusoid}) {
    CAPTURE(ae::initial_feature_name(kind));
    ae::Autoencoder model(tiny_config(kind), rng);
    movq::vq::TokenGrid grid = constant_grid(4, 4, 2, 8, 3);
    Tensor img = model.decode_tokens({grid});
    int h = img.dim(2), w = img.dim(3);
    float max_diff = 0.0f;
    std::vector<float> first_tile;
    for (int ti = 0; ti < h / 2; ++ti)
      for (int tj = 0; tj < w / 2; ++tj) {
        std::vector<float> tile;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            tile.push_back(img[(0 * h + ti * 2 + a) * w + tj * 2 + b]);
        if (first_tile.empty()) {
          first_tile = tile;
        } else {
          for (int k = 0; k < 4; ++k)
            max_diff = std::max(max_diff,
                                std::fabs(tile[k] - first_tile[k]));
        }
      }
    CHECK(max_diff > 0.0f);
  }
}

TEST_CASE("different token grids decode to different images") {
  Rng rng(18);
  ae::Autoencoder model(tiny_config(ae::InitialFeatureKind::kFourier), rng);
  movq::vq::TokenGrid a = constant_grid(4, 4, 2, 8, 1);
  movq::vq::TokenGrid b = constant_grid(4, 4, 2, 8, 6);
  Tensor ia = model.decode_tokens({a});
  Tensor ib = model.decode_tokens({b});
  float diff = 0.0f;
  for (std::int64_t i = 0; i < ia.numel(); ++i)
    diff = std::max(diff, std::fabs(ia[i] - ib[i]));
  CHECK(diff > 0.0f);
}

TEST_CASE("every modulated site works at the activation's own resolution") {
  Rng rng(19);
  ae::Autoencoder model(tiny_config(ae::InitialFeatureKind::kSinusoid), rng);
  Var z = Var::leaf(nn::normal_init(rng, {1, 8, 4, 4}, 1.0f));
  std::vector<ae::ScnTrace> trace;
  model.decode(z, &trace);
  // One latent-resolution block plus two upsampled levels, two sites each.
  CHECK(trace.size() == 6);
  std::vector<int> heights;
  for (const ae::ScnTrace& t : trace) {
    CHECK(t.gamma_h == t.act_h);
    CHECK(t.gamma_w == t.act_w);
    CHECK(t.beta_h == t.act_h);
    CHECK(t.beta_w == t.act_w);
    heights.push_back(t.act_h);
  }
  CHECK(heights == std::vector<int>{4, 4, 8, 8, 16, 16});
}

TEST_CASE("unquantized encoder-decoder chain matches finite differences") {
  Rng rng(20);
  ae::AutoencoderConfig cfg = tiny_config(ae::InitialFeatureKind::kFourier);
  cfg.image_size = 8;
  ae::Autoencoder model(cfg, rng);
  Var x = random_image(rng, 1, 8);

  auto loss_value = [&]() {
    Var z = model.encode(x);
    Var img = model.decode(z);
    return static_cast<double>(nn::mse(img, x).value()[0]);
  };

  Var probe = model.params().get("enc.out.w");
  {
    Var z = model.encode(x);
    Var img = model.decode(z);
    Var loss = nn::mse(img, x);
    model.params().zero_grad();
    nn::backward(loss);
  }
  std::vector<std::int64_t> picks;
  {
    const Tensor& g = probe.grad();
    std::vector<std::int64_t> order(g.numel());
    for (std::int64_t i = 0; i < g.numel(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
      return std::fabs(g[a]) > std::fabs(g[b]);
    });
    picks = {order[0], order[1]};
  }
  for (std::int64_t idx : picks) {
    double analytic = probe.grad()[idx];
    const double h = 1e-3;
    float saved = probe.node()->value[idx];
    probe.node()->value[idx] = saved + static_cast<float>(h);
    double up = loss_value();
    probe.node()->value[idx] = saved - static_cast<float>(h);
    double down = loss_value();
    probe.node()->value[idx] = saved;
    double fd = (up - down) / (2 * h);
    double scale = std::max(std::fabs(fd), std::fabs(analytic));
    INFO("idx=", idx, " fd=", fd, " analytic=", analytic);
    CHECK(std::fabs(fd - analytic) <= 1e-3 * scale);
  }
}

TEST_CASE("reconstruct keeps shapes and routes gradients past the bottleneck") {
  Rng rng(21);
  ae::Autoencoder model(tiny_config(ae::InitialFeatureKind::kSinusoid), rng);
  Var x = random_image(rng, 2, 16);
  ae::ReconstructResult r = model.reconstruct(x);
  CHECK(r.reconstruction.value().shape() == x.value().shape());
  CHECK(r.indices.size() == 2);
  CHECK(r.indices[0].h == 4);
  CHECK(r.indices[0].c == 2);

  Var total = nn::add(nn::add(r.reconstruction_loss, r.codebook_loss),
                      nn::scale(r.commitment_loss, 0.25f));
  model.params().zero_grad();
  nn::backward(total);
  double encoder_grad = 0.0, codebook_grad = 0.0;
  const Tensor& ge = model.params().get("enc.in.w").grad();
  for (std::int64_t i = 0; i < ge.numel(); ++i) encoder_grad += std::fabs(ge[i]);
  const Tensor& gc = model.params().get("codebook").grad();
  for (std::int64_t i = 0; i < gc.numel(); ++i)
    codebook_grad += std::fabs(gc[i]);
  CHECK(encoder_grad > 0.0);
  CHECK(codebook_grad > 0.0);
}

TEST_CASE("checkpoint reload reproduces forward outputs") {
  Rng rng(22);
  ae::Autoencoder model(tiny_config(ae::InitialFeatureKind::kFourier), rng);
  movq::vq::TokenGrid grid = constant_grid(4, 4, 2, 8, 5);
  Tensor before = model.decode_tokens({grid});
  const char* path = "test_ae_checkpoint.movq";
  model.save(path);
  ae::Autoencoder back = ae::Autoencoder::load(path);
  std::remove(path);
  CHECK(back.config().latent_dim == 8);
  CHECK(back.config().initial_feature == ae::InitialFeatureKind::kFourier);
  Tensor after = back.decode_tokens({grid});
  REQUIRE(after.numel() == before.numel());
  for (std::int64_t i = 0; i < before.numel(); ++i)
    CHECK(std::fabs(before[i] - after[i]) <= 1e-6f);
}

TEST_CASE("discriminator scores patches and hinge losses have the right sign") {
  Rng rng(23);
  ae::PatchDiscriminator disc(4, rng);
  Var real = random_image(rng, 1, 16);
  Var fake = random_image(rng, 1, 16);
  Var rs = disc.score(real);
  CHECK(rs.value().ndim() == 4);
  CHECK(rs.value().dim(1) == 1);
  CHECK(rs.value().dim(2) == 4);
  Var d_loss = ae::PatchDiscriminator::critic_loss(rs, disc.score(fake));
  CHECK(d_loss.value()[0] >= 0.0f);
  Var big = Var::leaf(Tensor::full({1, 1, 4, 4}, 5.0f));
  Var low = Var::leaf(Tensor::full({1, 1, 4, 4}, -5.0f));
  CHECK(ae::PatchDiscriminator::critic_loss(big, low).value()[0] ==
        doctest::Approx(0.0));
  CHECK(ae::PatchDiscriminator::generator_loss(low).value()[0] ==
        doctest::Approx(5.0));
}
