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

#include "movq/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

#include "movq/core/error.hpp"

namespace movq::harness {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" +
                      value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an unsigned integer, "
                      "got '" + value + "'");
  }
}

float parse_float(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    float v = std::stof(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" +
                      value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + value +
                    "'");
}

}  // namespace

Stage parse_stage(const std::string& name) {
  if (name == "vq") return Stage::kVq;
  if (name == "prior_mask") return Stage::kPriorMask;
  if (name == "prior_auto") return Stage::kPriorAuto;
  throw ConfigError("config: unknown stage '" + name +
                    "' (expected vq, prior_mask, or prior_auto)");
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::kVq: return "vq";
    case Stage::kPriorMask: return "prior_mask";
    case Stage::kPriorAuto: return "prior_auto";
  }
  return "vq";
}

void apply_config_entry(TrainConfig* cfg, const std::string& key,
                        const std::string& value) {
  if (key == "dataset") cfg->dataset = value;
  else if (key == "image_size") cfg->image_size = parse_int(key, value);
  else if (key == "downsample_factor")
    cfg->downsample_factor = parse_int(key, value);
  else if (key == "latent_dim") cfg->latent_dim = parse_int(key, value);
  else if (key == "chunks") cfg->chunks = parse_int(key, value);
  else if (key == "codebook_size") cfg->codebook_size = parse_int(key, value);
  else if (key == "beta") cfg->beta = parse_float(key, value);
  else if (key == "batch_size") cfg->batch_size = parse_int(key, value);
  else if (key == "learning_rate")
    cfg->learning_rate = parse_float(key, value);
  else if (key == "steps") cfg->steps = parse_int(key, value);
  else if (key == "seed") cfg->seed = parse_u64(key, value);
  else if (key == "initial_feature") cfg->initial_feature = value;
  else if (key == "adversarial") cfg->adversarial = parse_bool(key, value);
  else if (key == "adversarial_weight")
    cfg->adversarial_weight = parse_float(key, value);
  else if (key == "stage") cfg->stage = parse_stage(value);
  else if (key == "base_width") cfg->base_width = parse_int(key, value);
  else if (key == "blocks_per_level")
    cfg->blocks_per_level = parse_int(key, value);
  else if (key == "modulated_levels")
    cfg->modulated_levels = parse_int(key, value);
  else if (key == "prior_layers") cfg->prior_layers = parse_int(key, value);
  else if (key == "prior_heads") cfg->prior_heads = parse_int(key, value);
  else if (key == "prior_embed_dim")
    cfg->prior_embed_dim = parse_int(key, value);
  else if (key == "prior_hidden_dim")
    cfg->prior_hidden_dim = parse_int(key, value);
  else if (key == "sample_steps") cfg->sample_steps = parse_int(key, value);
  else if (key == "temperature") cfg->temperature = parse_float(key, value);
  else if (key == "confidence_noise")
    cfg->confidence_noise = parse_float(key, value);
  else if (key == "record_every") cfg->record_every = parse_int(key, value);
  else if (key == "checkpoint_every")
    cfg->checkpoint_every = parse_int(key, value);
  else if (key == "holdout_fraction")
    cfg->holdout_fraction = parse_float(key, value);
  else
    throw ConfigError("config: unknown key '" + key + "'");
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trimmed(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key=value");
    std::string key = trimmed(line.substr(0, eq));
    std::string value = trimmed(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": empty key");
    apply_config_entry(&cfg, key, value);
  }
  return cfg;
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.image_size < 4)
    throw ConfigError("config: image_size must be at least 4");
  if (cfg.downsample_factor < 2 ||
      cfg.image_size % cfg.downsample_factor != 0)
    throw ConfigError("config: downsample_factor must be >= 2 and divide "
                      "image_size");
  if (cfg.latent_dim < 1 || cfg.chunks < 1 ||
      cfg.latent_dim % cfg.chunks != 0)
    throw ConfigError("config: latent_dim must be a positive multiple of "
                      "chunks");
  if (cfg.codebook_size < 2)
    throw ConfigError("config: codebook_size must be at least 2");
  if (cfg.beta < 0.0f) throw ConfigError("config: beta must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0f))
    throw ConfigError("config: learning_rate must be positive");
  if (cfg.steps < 1) throw ConfigError("config: steps must be >= 1");
  if (cfg.adversarial_weight < 0.0f)
    throw ConfigError("config: adversarial_weight must be >= 0");
  if (cfg.stage != Stage::kVq) {
    if (cfg.prior_layers < 1 || cfg.prior_heads < 1 ||
        cfg.prior_embed_dim < 1 || cfg.prior_hidden_dim < 1)
      throw ConfigError("config: prior dimensions must be positive");
    if (cfg.prior_embed_dim % cfg.prior_heads != 0)
      throw ConfigError("config: prior_embed_dim must be divisible by "
                        "prior_heads");
    if (cfg.stage == Stage::kPriorMask &&
        cfg.prior_embed_dim % cfg.chunks != 0)
      throw ConfigError("config: prior_embed_dim must be divisible by "
                        "chunks in the mask stage");
  }
  if (cfg.sample_steps < 1)
    throw ConfigError("config: sample_steps must be >= 1");
  if (cfg.record_every < 1)
    throw ConfigError("config: record_every must be >= 1");
  if (cfg.checkpoint_every < 1)
    throw ConfigError("config: checkpoint_every must be >= 1");
  if (cfg.holdout_fraction < 0.0f || cfg.holdout_fraction >= 1.0f)
    throw ConfigError("config: holdout_fraction must lie in [0, 1)");
  ae::parse_initial_feature_kind(cfg.initial_feature);  // validates the name
}

ae::AutoencoderConfig autoencoder_config(const TrainConfig& cfg) {
  ae::AutoencoderConfig out;
  out.image_size = cfg.image_size;
  out.downsample_factor = cfg.downsample_factor;
  out.latent_dim = cfg.latent_dim;
  out.chunks = cfg.chunks;
  out.codebook_size = cfg.codebook_size;
  out.base_width = cfg.base_width;
  out.blocks_per_level = cfg.blocks_per_level;
  out.modulated_levels = cfg.modulated_levels;
  out.initial_feature = ae::parse_initial_feature_kind(cfg.initial_feature);
  out.commitment_weight = cfg.beta;
  return out;
}

prior::PriorConfig prior_config(const TrainConfig& cfg) {
  prior::PriorConfig out;
  out.layers = cfg.prior_layers;
  out.heads = cfg.prior_heads;
  out.embed_dim = cfg.prior_embed_dim;
  out.hidden_dim = cfg.prior_hidden_dim;
  out.h = cfg.image_size / cfg.downsample_factor;
  out.w = cfg.image_size / cfg.downsample_factor;
  out.chunks = cfg.chunks;
  out.codebook_size = cfg.codebook_size;
  out.num_classes = 0;
  out.mode = cfg.stage == Stage::kPriorAuto ? prior::PriorMode::kAuto
                                            : prior::PriorMode::kMask;
  return out;
}

}  // namespace movq::harness
