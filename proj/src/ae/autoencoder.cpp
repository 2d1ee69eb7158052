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

#include "movq/ae/autoencoder.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "movq/core/error.hpp"
#include "movq/nn/checkpoint.hpp"
#include "movq/nn/init.hpp"
#include "movq/nn/ops.hpp"

namespace movq::ae {
namespace {

constexpr float kTwoPi = 6.2831853071795864769f;

int norm_groups(int channels) { return channels >= 32 ? 32 : channels; }

bool power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

int log2_int(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

void validate_config(const AutoencoderConfig& cfg) {
  if (cfg.downsample_factor < 2 || !power_of_two(cfg.downsample_factor))
    throw ConfigError("autoencoder: downsample factor must be a power of two");
  if (cfg.image_size < cfg.downsample_factor ||
      cfg.image_size % cfg.downsample_factor != 0)
    throw ConfigError("autoencoder: image size " +
                      std::to_string(cfg.image_size) +
                      " not divisible by factor " +
                      std::to_string(cfg.downsample_factor));
  if (cfg.latent_dim < 1 || cfg.chunks < 1 ||
      cfg.latent_dim % cfg.chunks != 0)
    throw ConfigError("autoencoder: latent dim must split evenly into chunks");
  if (cfg.codebook_size < 2)
    throw ConfigError("autoencoder: codebook needs at least two entries");
  if (cfg.base_width < 2 || cfg.blocks_per_level < 1 ||
      cfg.modulated_levels < 0)
    throw ConfigError("autoencoder: invalid architecture plan");
  if (cfg.commitment_weight < 0.0f)
    throw ConfigError("autoencoder: commitment weight must be nonnegative");
  int levels = log2_int(cfg.downsample_factor);
  for (int l = 0; l <= levels; ++l) {
    int width = cfg.base_width << l;
    if (width >= 32 && width % 32 != 0)
      throw ConfigError("autoencoder: width " + std::to_string(width) +
                        " incompatible with 32-group normalization");
  }
  if ((cfg.base_width << levels) % 2 != 0)
    throw ConfigError("autoencoder: top width must be even");
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

InitialFeatureKind parse_initial_feature_kind(const std::string& name) {
  if (name == "sinusoid") return InitialFeatureKind::kSinusoid;
  if (name == "learned_constant") return InitialFeatureKind::kLearnedConstant;
  if (name == "fourier") return InitialFeatureKind::kFourier;
  throw ConfigError("unknown initial feature kind '" + name + "'");
}

std::string initial_feature_name(InitialFeatureKind kind) {
  switch (kind) {
    case InitialFeatureKind::kSinusoid: return "sinusoid";
    case InitialFeatureKind::kLearnedConstant: return "learned_constant";
    case InitialFeatureKind::kFourier: return "fourier";
  }
  throw ConfigError("unknown initial feature kind");
}

nn::Var scn_modulate(const nn::Var& activation, const nn::Var& z_q,
                     const ModulationParams& p, ScnTrace* trace) {
  if (activation.value().ndim() != 4 || z_q.value().ndim() != 4)
    throw ConfigError("scn_modulate: expected (batch, c, h, w) tensors");
  int ha = activation.value().dim(2), wa = activation.value().dim(3);
  int hz = z_q.value().dim(2), wz = z_q.value().dim(3);
  if (hz < 1 || wz < 1 || ha % hz != 0 || wa % wz != 0 ||
      ha / hz != wa / wz)
    throw ConfigError("scn_modulate: activation " + std::to_string(ha) + "x" +
                      std::to_string(wa) + " is not an integer multiple of " +
                      std::to_string(hz) + "x" + std::to_string(wz));
  int factor = ha / hz;
  nn::Var z = factor == 1 ? z_q : nn::upsample_nearest(z_q, factor);
  nn::Var gamma = nn::conv2d(z, p.gamma_weight, p.gamma_bias, 1, 0);
  nn::Var beta = nn::conv2d(z, p.beta_weight, p.beta_bias, 1, 0);
  nn::Var normed = nn::group_norm(activation, p.groups, p.eps);
  if (trace != nullptr) {
    trace->act_h = ha;
    trace->act_w = wa;
    trace->gamma_h = gamma.value().dim(2);
    trace->gamma_w = gamma.value().dim(3);
    trace->beta_h = beta.value().dim(2);
    trace->beta_w = beta.value().dim(3);
  }
  return nn::add(nn::mul(normed, gamma), beta);
}

Tensor sinusoid_feature(int h, int w, int channels) {
  if (h < 1 || w < 1 || channels < 1)
    throw ConfigError("sinusoid_feature: bad shape");
  Tensor out({channels, h, w});
  int row_channels = (channels + 1) / 2;
  int col_channels = channels - row_channels;
  for (int ch = 0; ch < channels; ++ch) {
    bool row_axis = ch < row_channels;
    int k = row_axis ? ch : ch - row_channels;
    int span = row_axis ? row_channels : col_channels;
    double freq = std::pow(10000.0, -2.0 * (k / 2) / std::max(span, 1));
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        double pos = row_axis ? i : j;
        double v = (k % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
        out[(static_cast<std::int64_t>(ch) * h + i) * w + j] =
            static_cast<float>(v);
      }
  }
  return out;
}

nn::Var fourier_feature(const nn::Var& z_q, const nn::Var& basis) {
  nn::Var phase =
      nn::scale(nn::conv2d(z_q, basis, nn::Var(), 1, 0), kTwoPi);
  return nn::concat_channels(nn::cos_op(phase), nn::sin_op(phase));
}

Autoencoder::ConvLayer Autoencoder::make_conv(const std::string& name,
                                              int cin, int cout, int k,
                                              int stride, int pad, Rng& rng) {
  ConvLayer conv;
  conv.w = params_.create(name + ".w", nn::conv_init(rng, cout, cin, k, k));
  conv.b = params_.create(name + ".b", Tensor({cout}));
  conv.stride = stride;
  conv.pad = pad;
  return conv;
}

Autoencoder::NormSite Autoencoder::make_norm(const std::string& name,
                                             int width, bool modulated,
                                             Rng& rng) {
  NormSite site;
  site.modulated = modulated;
  site.groups = norm_groups(width);
  if (modulated) {
    site.mod.gamma_weight = params_.create(
        name + ".gw", nn::normal_init(rng, {width, cfg_.latent_dim, 1, 1},
                                      0.02f));
    site.mod.gamma_bias =
        params_.create(name + ".gb", Tensor::full({width}, 1.0f));
    site.mod.beta_weight = params_.create(
        name + ".bw", nn::normal_init(rng, {width, cfg_.latent_dim, 1, 1},
                                      0.02f));
    site.mod.beta_bias = params_.create(name + ".bb", Tensor({width}));
    site.mod.groups = site.groups;
    site.mod.eps = site.eps;
  } else {
    site.gamma = params_.create(name + ".g", Tensor::full({width}, 1.0f));
    site.beta = params_.create(name + ".b", Tensor({width}));
  }
  return site;
}

Autoencoder::ResBlock Autoencoder::make_block(const std::string& name,
                                              int cin, int cout,
                                              bool modulated, Rng& rng) {
  ResBlock block;
  block.n1 = make_norm(name + ".n1", cin, modulated, rng);
  block.c1 = make_conv(name + ".c1", cin, cout, 3, 1, 1, rng);
  block.n2 = make_norm(name + ".n2", cout, modulated, rng);
  block.c2 = make_conv(name + ".c2", cout, cout, 3, 1, 1, rng);
  if (cin != cout) block.skip = make_conv(name + ".skip", cin, cout, 1, 1, 0, rng);
  return block;
}

nn::Var Autoencoder::run_conv(const ConvLayer& conv, const nn::Var& x) const {
  return nn::conv2d(x, conv.w, conv.b, conv.stride, conv.pad);
}

nn::Var Autoencoder::run_norm(const NormSite& site, const nn::Var& x,
                              const nn::Var& z_q,
                              std::vector<ScnTrace>* trace) const {
  if (!site.modulated)
    return nn::channel_affine(nn::group_norm(x, site.groups, site.eps),
                              site.gamma, site.beta);
  ScnTrace entry;
  nn::Var y = scn_modulate(x, z_q, site.mod, trace ? &entry : nullptr);
  if (trace != nullptr) trace->push_back(entry);
  return y;
}

nn::Var Autoencoder::run_block(const ResBlock& block, const nn::Var& x,
                               const nn::Var& z_q,
                               std::vector<ScnTrace>* trace) const {
  nn::Var h = run_norm(block.n1, x, z_q, trace);
  h = nn::swish(h);
  h = run_conv(block.c1, h);
  h = run_norm(block.n2, h, z_q, trace);
  h = nn::swish(h);
  h = run_conv(block.c2, h);
  nn::Var shortcut = block.skip.w.defined() ? run_conv(block.skip, x) : x;
  return nn::add(shortcut, h);
}

int Autoencoder::level_width(int level) const {
  return cfg_.base_width << level;
}

int Autoencoder::top_width() const {
  return level_width(log2_int(cfg_.downsample_factor));
}

Autoencoder::Autoencoder(const AutoencoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  validate_config(cfg_);
  int levels = log2_int(cfg_.downsample_factor);
  int latent = latent_size();

  codebook_ = params_.create(
      "codebook", vq::codebook_init(cfg_.codebook_size,
                                    cfg_.latent_dim / cfg_.chunks, rng));

  enc_in_ = make_conv("enc.in", 3, level_width(0), 3, 1, 1, rng);
  for (int l = 0; l < levels; ++l) {
    Level level;
    std::string base = "enc.l" + std::to_string(l);
    for (int k = 0; k < cfg_.blocks_per_level; ++k)
      level.blocks.push_back(make_block(base + ".b" + std::to_string(k),
                                        level_width(l), level_width(l), false,
                                        rng));
    level.resample =
        make_conv(base + ".down", level_width(l), level_width(l + 1), 3, 2, 1,
                  rng);
    enc_levels_.push_back(std::move(level));
  }
  enc_mid_ = make_block("enc.mid", top_width(), top_width(), false, rng);
  enc_out_norm_ = make_norm("enc.out_norm", top_width(), false, rng);
  enc_out_ = make_conv("enc.out", top_width(), cfg_.latent_dim, 3, 1, 1, rng);

  if (cfg_.initial_feature == InitialFeatureKind::kLearnedConstant)
    f0_constant_ = params_.create(
        "dec.f0", nn::normal_init(rng, {top_width(), latent, latent}, 1.0f));
  if (cfg_.initial_feature == InitialFeatureKind::kFourier)
    fourier_basis_ = params_.create(
        "dec.fourier_basis",
        nn::normal_init(rng, {top_width() / 2, cfg_.latent_dim, 1, 1}, 1.0f),
        /*trainable=*/false);

  dec_mid_ =
      make_block("dec.mid", top_width(), top_width(), cfg_.modulated_levels > 0,
                 rng);
  for (int i = 0; i < levels; ++i) {
    Level level;
    std::string base = "dec.l" + std::to_string(i);
    int wide = level_width(levels - i);
    int narrow = level_width(levels - i - 1);
    bool modulated = (i + 1) < cfg_.modulated_levels;
    level.resample = make_conv(base + ".up", wide, wide, 3, 1, 1, rng);
    for (int k = 0; k < cfg_.blocks_per_level; ++k)
      level.blocks.push_back(make_block(base + ".b" + std::to_string(k),
                                        k == 0 ? wide : narrow, narrow,
                                        modulated, rng));
    dec_levels_.push_back(std::move(level));
  }
  dec_out_norm_ = make_norm("dec.out_norm", level_width(0), false, rng);
  dec_out_ = make_conv("dec.out", level_width(0), 3, 3, 1, 1, rng);
}

nn::Var Autoencoder::encode(const nn::Var& image) {
  const Tensor& v = image.value();
  if (v.ndim() != 4 || v.dim(1) != 3)
    throw ConfigError("encode: expected a (batch, 3, h, w) image tensor");
  if (v.dim(2) % cfg_.downsample_factor != 0 ||
      v.dim(3) % cfg_.downsample_factor != 0)
    throw ConfigError("encode: image size " + std::to_string(v.dim(2)) + "x" +
                      std::to_string(v.dim(3)) + " not divisible by " +
                      std::to_string(cfg_.downsample_factor));
  nn::Var x = run_conv(enc_in_, image);
  for (const Level& level : enc_levels_) {
    for (const ResBlock& block : level.blocks)
      x = run_block(block, x, nn::Var(), nullptr);
    x = run_conv(level.resample, x);
  }
  x = run_block(enc_mid_, x, nn::Var(), nullptr);
  x = run_norm(enc_out_norm_, x, nn::Var(), nullptr);
  x = nn::swish(x);
  return run_conv(enc_out_, x);
}

nn::Var Autoencoder::initial_feature(const nn::Var& z_q) {
  int batch = z_q.value().dim(0);
  int h = z_q.value().dim(2), w = z_q.value().dim(3);
  switch (cfg_.initial_feature) {
    case InitialFeatureKind::kSinusoid:
      return nn::repeat_batch(
          nn::Var::leaf(sinusoid_feature(h, w, top_width())), batch);
    case InitialFeatureKind::kLearnedConstant:
      if (h != latent_size() || w != latent_size())
        throw ConfigError(
            "initial_feature: learned constant is fixed to the configured "
            "latent size");
      return nn::repeat_batch(f0_constant_, batch);
    case InitialFeatureKind::kFourier:
      return fourier_feature(z_q, fourier_basis_);
  }
  throw ConfigError("initial_feature: unknown kind");
}

nn::Var Autoencoder::decode(const nn::Var& z_q,
                            std::vector<ScnTrace>* trace) {
  const Tensor& v = z_q.value();
  if (v.ndim() != 4 || v.dim(1) != cfg_.latent_dim)
    throw ConfigError("decode: expected a (batch, " +
                      std::to_string(cfg_.latent_dim) + ", h, w) latent");
  nn::Var x = initial_feature(z_q);
  x = run_block(dec_mid_, x, z_q, trace);
  for (const Level& level : dec_levels_) {
    x = nn::upsample_nearest(x, 2);
    x = run_conv(level.resample, x);
    for (const ResBlock& block : level.blocks)
      x = run_block(block, x, z_q, trace);
  }
  x = run_norm(dec_out_norm_, x, nn::Var(), nullptr);
  x = nn::swish(x);
  x = run_conv(dec_out_, x);
  return nn::tanh_op(x);
}

ReconstructResult Autoencoder::reconstruct(const nn::Var& image) {
  nn::Var latent = encode(image);
  vq::QuantizeGraph q = vq::quantize_train(latent, codebook_, cfg_.chunks);
  ReconstructResult out;
  out.reconstruction = decode(q.z_q);
  out.reconstruction_loss = nn::mse(out.reconstruction, image);
  out.codebook_loss = q.codebook_loss;
  out.commitment_loss = q.commitment_loss;
  out.indices = std::move(q.indices);
  return out;
}

Tensor Autoencoder::decode_tokens(const std::vector<vq::TokenGrid>& grids) {
  if (grids.empty()) throw ArgumentError("decode_tokens: no grids");
  Tensor first = vq::dequantize(grids.front(), codebook_.value());
  int h = first.dim(2), w = first.dim(3);
  Tensor batch({static_cast<int>(grids.size()), cfg_.latent_dim, h, w});
  std::int64_t stride = first.numel();
  for (std::size_t i = 0; i < grids.size(); ++i) {
    Tensor z = i == 0 ? first : vq::dequantize(grids[i], codebook_.value());
    if (z.numel() != stride)
      throw ConfigError("decode_tokens: grids disagree on geometry");
    std::memcpy(batch.data() + static_cast<std::int64_t>(i) * stride, z.data(),
                static_cast<std::size_t>(stride) * sizeof(float));
  }
  return decode(nn::Var::leaf(batch)).value();
}

void Autoencoder::save(const std::string& path) const {
  nn::Checkpoint ck;
  ck.config["model"] = "autoencoder";
  ck.config["image_size"] = std::to_string(cfg_.image_size);
  ck.config["downsample_factor"] = std::to_string(cfg_.downsample_factor);
  ck.config["latent_dim"] = std::to_string(cfg_.latent_dim);
  ck.config["chunks"] = std::to_string(cfg_.chunks);
  ck.config["codebook_size"] = std::to_string(cfg_.codebook_size);
  ck.config["base_width"] = std::to_string(cfg_.base_width);
  ck.config["blocks_per_level"] = std::to_string(cfg_.blocks_per_level);
  ck.config["modulated_levels"] = std::to_string(cfg_.modulated_levels);
  ck.config["initial_feature"] = initial_feature_name(cfg_.initial_feature);
  ck.config["commitment_weight"] = format_float(cfg_.commitment_weight);
  params_.export_arrays(&ck.arrays);
  nn::save_checkpoint(path, ck);
}

Autoencoder Autoencoder::load(const std::string& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  if (ck.config_value("model") != "autoencoder")
    throw FormatError("checkpoint at " + path + " is not an autoencoder");
  AutoencoderConfig cfg;
  cfg.image_size = ck.config_int("image_size");
  cfg.downsample_factor = ck.config_int("downsample_factor");
  cfg.latent_dim = ck.config_int("latent_dim");
  cfg.chunks = ck.config_int("chunks");
  cfg.codebook_size = ck.config_int("codebook_size");
  cfg.base_width = ck.config_int("base_width");
  cfg.blocks_per_level = ck.config_int("blocks_per_level");
  cfg.modulated_levels = ck.config_int("modulated_levels");
  cfg.initial_feature =
      parse_initial_feature_kind(ck.config_value("initial_feature"));
  cfg.commitment_weight = ck.config_float("commitment_weight");
  Rng rng(0);
  Autoencoder model(cfg, rng);
  model.params_.import_arrays(ck.arrays);
  return model;
}

PatchDiscriminator::PatchDiscriminator(int base_width, Rng& rng) {
  struct Plan {
    int cin, cout, k, stride, pad;
  };
  const Plan plan[] = {{3, base_width, 4, 2, 1},
                       {base_width, base_width * 2, 4, 2, 1},
                       {base_width * 2, 1, 3, 1, 1}};
  int idx = 0;
  for (const Plan& p : plan) {
    std::string name = "disc.c" + std::to_string(idx++);
    weights_.push_back(
        params_.create(name + ".w", nn::conv_init(rng, p.cout, p.cin, p.k,
                                                  p.k)));
    biases_.push_back(params_.create(name + ".b", Tensor({p.cout})));
  }
}

nn::Var PatchDiscriminator::score(const nn::Var& image) {
  nn::Var x = nn::conv2d(image, weights_[0], biases_[0], 2, 1);
  x = nn::leaky_relu(x, 0.2f);
  x = nn::conv2d(x, weights_[1], biases_[1], 2, 1);
  x = nn::leaky_relu(x, 0.2f);
  return nn::conv2d(x, weights_[2], biases_[2], 1, 1);
}

nn::Var PatchDiscriminator::critic_loss(const nn::Var& real_scores,
                                        const nn::Var& fake_scores) {
  nn::Var real_term =
      nn::mean_all(nn::relu(nn::add_scalar(nn::scale(real_scores, -1.0f),
                                           1.0f)));
  nn::Var fake_term =
      nn::mean_all(nn::relu(nn::add_scalar(fake_scores, 1.0f)));
  return nn::add(real_term, fake_term);
}

nn::Var PatchDiscriminator::generator_loss(const nn::Var& fake_scores) {
  return nn::scale(nn::mean_all(fake_scores), -1.0f);
}

}  // namespace movq::ae
