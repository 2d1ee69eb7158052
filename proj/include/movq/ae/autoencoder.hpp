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

#ifndef MOVQ_AE_AUTOENCODER_HPP_
#define MOVQ_AE_AUTOENCODER_HPP_

#include <string>
#include <vector>

#include "movq/core/rng.hpp"
#include "movq/core/tensor.hpp"
#include "movq/nn/graph.hpp"
#include "movq/nn/params.hpp"
#include "movq/vq/codebook.hpp"
#include "movq/vq/tokens.hpp"

namespace movq::ae {

enum class InitialFeatureKind { kSinusoid, kLearnedConstant, kFourier };

/// Maps "sinusoid" / "learned_constant" / "fourier" to the enum; any other
/// name throws ConfigError.
InitialFeatureKind parse_initial_feature_kind(const std::string& name);
std::string initial_feature_name(InitialFeatureKind kind);

struct AutoencoderConfig {
  int image_size = 32;
  int downsample_factor = 8;  // power of two
  int latent_dim = 64;        // channels of the continuous latent
  int chunks = 4;             // independently quantized channel groups
  int codebook_size = 64;
  int base_width = 64;        // width at full resolution, doubling downward
  int blocks_per_level = 2;
  int modulated_levels = 3;   // decoder resolutions with conditional norm,
                              // counted from the latent end
  InitialFeatureKind initial_feature = InitialFeatureKind::kSinusoid;
  float commitment_weight = 0.25f;
};

/// Per-pixel scale/bias maps predicted from the quantized latent, plus the
/// normalization geometry they modulate.
struct ModulationParams {
  nn::Var gamma_weight;  // (width, latent_dim, 1, 1)
  nn::Var gamma_bias;    // (width)
  nn::Var beta_weight;
  nn::Var beta_bias;
  int groups = 32;
  float eps = 1e-6f;
};

/// Resolution bookkeeping for one modulated normalization site.
struct ScnTrace {
  int act_h = 0, act_w = 0;
  int gamma_h = 0, gamma_w = 0;
  int beta_h = 0, beta_w = 0;
};

/// gamma(z_q) * groupnorm(activation) + beta(z_q), with z_q upsampled
/// nearest-neighbor to the activation resolution. Throws ConfigError when
/// the resolutions are not related by one integer factor.
nn::Var scn_modulate(const nn::Var& activation, const nn::Var& z_q,
                     const ModulationParams& p, ScnTrace* trace = nullptr);

/// Fixed sin/cos positional grid of shape (channels, h, w); independent of
/// any latent.
Tensor sinusoid_feature(int h, int w, int channels);

/// (b, 2m, h, w) features cos(2*pi*B*z), sin(2*pi*B*z) per cell, from a
/// fixed (m, latent_dim, 1, 1) basis.
nn::Var fourier_feature(const nn::Var& z_q, const nn::Var& basis);

struct ReconstructResult {
  nn::Var reconstruction;       // same shape as the input image
  nn::Var reconstruction_loss;  // pixel mean squared error
  nn::Var codebook_loss;
  nn::Var commitment_loss;      // unweighted; scale by commitment_weight
  std::vector<vq::TokenGrid> indices;
};

class Autoencoder {
 public:
  Autoencoder(const AutoencoderConfig& cfg, Rng& rng);

  const AutoencoderConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  nn::Var codebook() { return codebook_; }
  int latent_size() const { return cfg_.image_size / cfg_.downsample_factor; }

  /// (b, 3, H, W) -> (b, latent_dim, H/f, W/f). Throws ConfigError when the
  /// spatial size is not divisible by the downsample factor.
  nn::Var encode(const nn::Var& image);

  /// Decoder input for a (b, latent_dim, h, w) quantized latent, per the
  /// configured kind.
  nn::Var initial_feature(const nn::Var& z_q);

  /// (b, latent_dim, h, w) -> (b, 3, f*h, f*w) in [-1, 1]. When trace is
  /// given, appends one entry per modulated normalization site.
  nn::Var decode(const nn::Var& z_q, std::vector<ScnTrace>* trace = nullptr);

  /// Full encode -> quantize -> decode graph with all loss terms.
  ReconstructResult reconstruct(const nn::Var& image);

  /// Inference decode of stored token grids to an image batch.
  Tensor decode_tokens(const std::vector<vq::TokenGrid>& grids);

  void save(const std::string& path) const;
  static Autoencoder load(const std::string& path);

 private:
  struct ConvLayer {
    nn::Var w, b;
    int stride = 1, pad = 0;
  };
  struct NormSite {
    bool modulated = false;
    nn::Var gamma, beta;  // plain per-channel affine
    ModulationParams mod;
    int groups = 32;
    float eps = 1e-6f;
  };
  struct ResBlock {
    NormSite n1, n2;
    ConvLayer c1, c2;
    ConvLayer skip;  // defined only when the width changes
  };
  struct Level {
    std::vector<ResBlock> blocks;
    ConvLayer resample;
  };

  ConvLayer make_conv(const std::string& name, int cin, int cout, int k,
                      int stride, int pad, Rng& rng);
  NormSite make_norm(const std::string& name, int width, bool modulated,
                     Rng& rng);
  ResBlock make_block(const std::string& name, int cin, int cout,
                      bool modulated, Rng& rng);
  nn::Var run_conv(const ConvLayer& conv, const nn::Var& x) const;
  nn::Var run_norm(const NormSite& site, const nn::Var& x, const nn::Var& z_q,
                   std::vector<ScnTrace>* trace) const;
  nn::Var run_block(const ResBlock& block, const nn::Var& x,
                    const nn::Var& z_q, std::vector<ScnTrace>* trace) const;
  int level_width(int level) const;
  int top_width() const;

  AutoencoderConfig cfg_;
  nn::ParamStore params_;
  nn::Var codebook_;

  ConvLayer enc_in_;
  std::vector<Level> enc_levels_;
  ResBlock enc_mid_;
  NormSite enc_out_norm_;
  ConvLayer enc_out_;

  nn::Var f0_constant_;      // learned_constant kind
  nn::Var fourier_basis_;    // fourier kind, fixed
  ResBlock dec_mid_;
  std::vector<Level> dec_levels_;
  NormSite dec_out_norm_;
  ConvLayer dec_out_;
};

/// Small convolutional critic scoring overlapping patches; used by the
/// optional adversarial objective.
class PatchDiscriminator {
 public:
  PatchDiscriminator(int base_width, Rng& rng);
  nn::ParamStore& params() { return params_; }
  /// (b, 3, H, W) -> patch score map.
  nn::Var score(const nn::Var& image);
  /// Hinge losses; the generator weight is applied by the caller.
  static nn::Var critic_loss(const nn::Var& real_scores,
                             const nn::Var& fake_scores);
  static nn::Var generator_loss(const nn::Var& fake_scores);

 private:
  nn::ParamStore params_;
  std::vector<nn::Var> weights_;
  std::vector<nn::Var> biases_;
};

}  // namespace movq::ae

#endif  // MOVQ_AE_AUTOENCODER_HPP_
