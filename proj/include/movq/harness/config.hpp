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

#ifndef MOVQ_HARNESS_CONFIG_HPP_
#define MOVQ_HARNESS_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "movq/ae/autoencoder.hpp"
#include "movq/prior/transformer.hpp"

namespace movq::harness {

enum class Stage { kVq, kPriorMask, kPriorAuto };

Stage parse_stage(const std::string& name);
const char* stage_name(Stage stage);

/// Everything one training or evaluation run needs, with defaults small
/// enough that the full pipeline turns over on a laptop CPU in minutes.
struct TrainConfig {
  std::string dataset = "synthetic:64";
  int image_size = 32;
  int downsample_factor = 8;
  int latent_dim = 64;
  int chunks = 4;
  int codebook_size = 64;
  float beta = 0.25f;
  int batch_size = 8;
  float learning_rate = 1e-4f;
  int steps = 200;
  std::uint64_t seed = 0;
  std::string initial_feature = "sinusoid";
  bool adversarial = false;
  float adversarial_weight = 0.1f;
  Stage stage = Stage::kVq;
  int base_width = 32;
  int blocks_per_level = 1;
  int modulated_levels = 3;
  int prior_layers = 2;
  int prior_heads = 4;
  int prior_embed_dim = 64;
  int prior_hidden_dim = 128;
  int sample_steps = 8;
  float temperature = 1.0f;
  float confidence_noise = 4.0f;
  int record_every = 25;
  int checkpoint_every = 500;
  float holdout_fraction = 0.2f;
};

/// Applies one key=value pair; unknown keys and unparsable values are
/// configuration errors.
void apply_config_entry(TrainConfig* cfg, const std::string& key,
                        const std::string& value);

/// Flat key=value text, one entry per line; '#' starts a comment.
TrainConfig load_train_config(const std::string& path);

void validate_train_config(const TrainConfig& cfg);

ae::AutoencoderConfig autoencoder_config(const TrainConfig& cfg);
prior::PriorConfig prior_config(const TrainConfig& cfg);

}  // namespace movq::harness

#endif  // MOVQ_HARNESS_CONFIG_HPP_
