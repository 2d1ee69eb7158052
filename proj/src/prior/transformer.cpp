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

#include "movq/prior/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "movq/core/error.hpp"
#include "movq/nn/checkpoint.hpp"
#include "movq/nn/init.hpp"
#include "movq/nn/ops.hpp"

namespace movq::prior {
namespace {

constexpr float kLayerNormEps = 1e-5f;
constexpr float kPi = 3.14159265358979323846f;

void validate_config(const PriorConfig& cfg) {
  if (cfg.layers < 1 || cfg.heads < 1 || cfg.embed_dim < 1 ||
      cfg.hidden_dim < 1)
    throw ConfigError("prior: transformer dimensions must be positive");
  if (cfg.embed_dim % cfg.heads != 0)
    throw ConfigError("prior: embed dim must divide evenly across heads");
  if (cfg.h < 1 || cfg.w < 1 || cfg.chunks < 1)
    throw ConfigError("prior: grid geometry must be positive");
  if (cfg.codebook_size < 2)
    throw ConfigError("prior: vocabulary needs at least two entries");
  if (cfg.num_classes < 0)
    throw ConfigError("prior: class count must be nonnegative");
  if (cfg.mode == PriorMode::kMask && cfg.embed_dim % cfg.chunks != 0)
    throw ConfigError(
        "prior: embed dim must split evenly across grid channels");
}

int sample_row(const float* logits, int vocab, float temperature, Rng& rng,
               double* log_prob) {
  if (temperature <= 1e-6f) {
    int best = 0;
    for (int k = 1; k < vocab; ++k)
      if (logits[k] > logits[best]) best = k;
    if (log_prob != nullptr) *log_prob = 0.0;
    return best;
  }
  double max_scaled = -1e300;
  std::vector<double> scaled(vocab);
  for (int k = 0; k < vocab; ++k) {
    scaled[k] = static_cast<double>(logits[k]) / temperature;
    max_scaled = std::max(max_scaled, scaled[k]);
  }
  double z = 0.0;
  for (int k = 0; k < vocab; ++k) {
    scaled[k] = std::exp(scaled[k] - max_scaled);
    z += scaled[k];
  }
  double u = rng.uniform() * z;
  double cum = 0.0;
  int pick = vocab - 1;
  for (int k = 0; k < vocab; ++k) {
    cum += scaled[k];
    if (u < cum) {
      pick = k;
      break;
    }
  }
  if (log_prob != nullptr)
    *log_prob = std::log(std::max(scaled[pick] / z, 1e-300));
  return pick;
}

double gumbel(Rng& rng) {
  return -std::log(-std::log(rng.uniform_open()));
}

}  // namespace

PriorMode parse_prior_mode(const std::string& name) {
  if (name == "mask") return PriorMode::kMask;
  if (name == "auto") return PriorMode::kAuto;
  throw ConfigError("unknown prior mode '" + name + "'");
}

std::string prior_mode_name(PriorMode mode) {
  return mode == PriorMode::kMask ? "mask" : "auto";
}

int MaskState::masked_count() const {
  int n = 0;
  for (std::uint8_t m : mask) n += m != 0;
  return n;
}

float cosine_ratio(float u) {
  if (u <= 0.0f) return 1.0f;
  if (u >= 1.0f) return 0.0f;
  return std::cos(kPi * 0.5f * u);
}

PriorModel::PriorModel(const PriorConfig& cfg, Rng& rng) : cfg_(cfg) {
  validate_config(cfg_);
  int seq = cfg_.h * cfg_.w;
  if (cfg_.mode == PriorMode::kMask) {
    int per_channel = cfg_.embed_dim / cfg_.chunks;
    for (int ch = 0; ch < cfg_.chunks; ++ch)
      channel_tables_.push_back(params_.create(
          "emb.ch" + std::to_string(ch),
          nn::normal_init(rng, {cfg_.codebook_size + 1, per_channel}, 0.02f)));
    pos_ = params_.create("pos",
                          nn::normal_init(rng, {seq, cfg_.embed_dim}, 0.02f));
    if (cfg_.num_classes > 0)
      class_table_ = params_.create(
          "class_emb",
          nn::normal_init(rng, {cfg_.num_classes, cfg_.embed_dim}, 0.02f));
  } else {
    int rows = cfg_.codebook_size + 1 + cfg_.num_classes;
    token_table_ = params_.create(
        "emb.tok", nn::normal_init(rng, {rows, cfg_.embed_dim}, 0.02f));
    pos_ = params_.create(
        "pos", nn::normal_init(rng, {entry_count(), cfg_.embed_dim}, 0.02f));
  }

  for (int l = 0; l < cfg_.layers; ++l) {
    std::string base = "blk" + std::to_string(l);
    Block blk;
    blk.ln1_g = params_.create(base + ".ln1.g",
                               Tensor::full({cfg_.embed_dim}, 1.0f));
    blk.ln1_b = params_.create(base + ".ln1.b", Tensor({cfg_.embed_dim}));
    blk.wq = params_.create(
        base + ".attn.wq",
        nn::normal_init(rng, {cfg_.embed_dim, cfg_.embed_dim}, 0.02f));
    blk.bq = params_.create(base + ".attn.bq", Tensor({cfg_.embed_dim}));
    blk.wk = params_.create(
        base + ".attn.wk",
        nn::normal_init(rng, {cfg_.embed_dim, cfg_.embed_dim}, 0.02f));
    blk.bk = params_.create(base + ".attn.bk", Tensor({cfg_.embed_dim}));
    blk.wv = params_.create(
        base + ".attn.wv",
        nn::normal_init(rng, {cfg_.embed_dim, cfg_.embed_dim}, 0.02f));
    blk.bv = params_.create(base + ".attn.bv", Tensor({cfg_.embed_dim}));
    blk.wo = params_.create(
        base + ".attn.wo",
        nn::normal_init(rng, {cfg_.embed_dim, cfg_.embed_dim}, 0.02f));
    blk.bo = params_.create(base + ".attn.bo", Tensor({cfg_.embed_dim}));
    blk.ln2_g = params_.create(base + ".ln2.g",
                               Tensor::full({cfg_.embed_dim}, 1.0f));
    blk.ln2_b = params_.create(base + ".ln2.b", Tensor({cfg_.embed_dim}));
    blk.w1 = params_.create(
        base + ".mlp.w1",
        nn::normal_init(rng, {cfg_.hidden_dim, cfg_.embed_dim}, 0.02f));
    blk.b1 = params_.create(base + ".mlp.b1", Tensor({cfg_.hidden_dim}));
    blk.w2 = params_.create(
        base + ".mlp.w2",
        nn::normal_init(rng, {cfg_.embed_dim, cfg_.hidden_dim}, 0.02f));
    blk.b2 = params_.create(base + ".mlp.b2", Tensor({cfg_.embed_dim}));
    blocks_.push_back(std::move(blk));
  }
  ln_f_g_ = params_.create("ln_f.g", Tensor::full({cfg_.embed_dim}, 1.0f));
  ln_f_b_ = params_.create("ln_f.b", Tensor({cfg_.embed_dim}));
  int head_out = cfg_.mode == PriorMode::kMask
                     ? cfg_.chunks * cfg_.codebook_size
                     : cfg_.codebook_size;
  head_w_ = params_.create(
      "head.w", nn::normal_init(rng, {head_out, cfg_.embed_dim}, 0.02f));
  head_b_ = params_.create("head.b", Tensor({head_out}));
}

void PriorModel::require_mode(PriorMode mode, const char* op) const {
  if (cfg_.mode != mode)
    throw ModeError(std::string(op) + ": model was trained in '" +
                    prior_mode_name(cfg_.mode) + "' mode");
}

void PriorModel::check_grid(const vq::TokenGrid& grid) const {
  if (grid.h != cfg_.h || grid.w != cfg_.w || grid.c != cfg_.chunks)
    throw ConfigError("prior: grid geometry " + std::to_string(grid.h) + "x" +
                      std::to_string(grid.w) + "x" + std::to_string(grid.c) +
                      " does not match the model");
  if (grid.vocab != cfg_.codebook_size)
    throw ConfigError("prior: grid vocabulary does not match the model");
}

nn::Var PriorModel::embed_rows(const std::vector<const vq::TokenGrid*>& grids,
                               const std::vector<const MaskState*>& masks,
                               const std::vector<int>& class_ids,
                               int* seq_len) {
  int b = static_cast<int>(grids.size());
  int positions = cfg_.h * cfg_.w;
  int n = entry_count();
  bool conditioned = class_ids[0] >= 0;
  for (int i = 0; i < b; ++i) {
    check_grid(*grids[i]);
    if (static_cast<int>(masks[i]->mask.size()) != n)
      throw ConfigError("prior: mask size does not match the grid");
    if ((class_ids[i] >= 0) != conditioned)
      throw ConfigError("prior: mixed conditioning within one batch");
    if (conditioned &&
        (cfg_.num_classes == 0 || class_ids[i] >= cfg_.num_classes))
      throw ConfigError("prior: class id out of range");
  }

  std::vector<nn::Var> parts;
  std::vector<int> rows(static_cast<std::size_t>(b) * positions);
  for (int ch = 0; ch < cfg_.chunks; ++ch) {
    for (int i = 0; i < b; ++i)
      for (int p = 0; p < positions; ++p) {
        int e = p * cfg_.chunks + ch;
        if (masks[i]->mask[e]) {
          rows[static_cast<std::size_t>(i) * positions + p] =
              cfg_.codebook_size;
        } else {
          int idx = grids[i]->indices[e];
          if (idx < 0 || idx >= cfg_.codebook_size)
            throw ValidationError("prior: token index " + std::to_string(idx) +
                                  " outside the vocabulary");
          rows[static_cast<std::size_t>(i) * positions + p] = idx;
        }
      }
    parts.push_back(nn::gather_rows(channel_tables_[ch], rows));
  }
  nn::Var x = nn::concat_lastdim(parts);
  nn::Var x3 = nn::reshape(x, {b, positions, cfg_.embed_dim});
  x3 = nn::add_matrix_bias(x3, pos_);
  int seq = positions;
  if (conditioned) {
    nn::Var cls = nn::gather_rows(class_table_, class_ids);
    x3 = nn::prepend_token(cls, x3);
    seq += 1;
  }
  *seq_len = seq;
  return nn::reshape(x3, {b * seq, cfg_.embed_dim});
}

nn::Var PriorModel::transformer(const nn::Var& input, int batch, int seq,
                                bool causal) {
  int heads = cfg_.heads;
  int dim = cfg_.embed_dim;
  int head_dim = dim / heads;
  float att_scale = 1.0f / std::sqrt(static_cast<float>(head_dim));

  nn::Var mask_leaf;
  if (causal) {
    Tensor m({batch * heads, seq, seq});
    for (int bh = 0; bh < batch * heads; ++bh)
      for (int i = 0; i < seq; ++i)
        for (int j = i + 1; j < seq; ++j)
          m[(static_cast<std::int64_t>(bh) * seq + i) * seq + j] = -1e9f;
    mask_leaf = nn::Var::leaf(std::move(m));
  }

  auto split_heads = [&](const nn::Var& rows) {
    nn::Var four = nn::reshape(rows, {batch, seq, heads, head_dim});
    return nn::reshape(nn::permute(four, {0, 2, 1, 3}),
                       {batch * heads, seq, head_dim});
  };

  nn::Var x = input;
  for (const Block& blk : blocks_) {
    nn::Var normed = nn::layer_norm(x, blk.ln1_g, blk.ln1_b, kLayerNormEps);
    nn::Var q = split_heads(nn::linear(normed, blk.wq, blk.bq));
    nn::Var k = split_heads(nn::linear(normed, blk.wk, blk.bk));
    nn::Var v = split_heads(nn::linear(normed, blk.wv, blk.bv));
    nn::Var scores = nn::scale(nn::bmm(q, k, false, true), att_scale);
    if (causal) scores = nn::add(scores, mask_leaf);
    nn::Var attended = nn::bmm(nn::softmax_lastdim(scores), v);
    nn::Var merged = nn::reshape(
        nn::permute(nn::reshape(attended, {batch, heads, seq, head_dim}),
                    {0, 2, 1, 3}),
        {batch * seq, dim});
    x = nn::add(x, nn::linear(merged, blk.wo, blk.bo));

    nn::Var normed2 = nn::layer_norm(x, blk.ln2_g, blk.ln2_b, kLayerNormEps);
    nn::Var hidden = nn::gelu(nn::linear(normed2, blk.w1, blk.b1));
    x = nn::add(x, nn::linear(hidden, blk.w2, blk.b2));
  }
  return nn::layer_norm(x, ln_f_g_, ln_f_b_, kLayerNormEps);
}

nn::Var PriorModel::forward_mask_rows(
    const std::vector<const vq::TokenGrid*>& grids,
    const std::vector<const MaskState*>& masks,
    const std::vector<int>& class_ids) {
  require_mode(PriorMode::kMask, "predict");
  int b = static_cast<int>(grids.size());
  int positions = cfg_.h * cfg_.w;
  int seq = 0;
  nn::Var x = embed_rows(grids, masks, class_ids, &seq);
  nn::Var y = transformer(x, b, seq, /*causal=*/false);
  if (seq != positions) {
    nn::Var y3 = nn::reshape(y, {b, seq, cfg_.embed_dim});
    y = nn::reshape(nn::tail_rows(y3, seq - positions),
                    {b * positions, cfg_.embed_dim});
  }
  nn::Var logits = nn::linear(y, head_w_, head_b_);
  ++forward_calls_;
  return nn::reshape(logits,
                     {b * positions * cfg_.chunks, cfg_.codebook_size});
}

nn::Var PriorModel::forward_auto_rows(
    const std::vector<std::vector<int>>& inputs) {
  int b = static_cast<int>(inputs.size());
  int seq = static_cast<int>(inputs[0].size());
  int table_rows = cfg_.codebook_size + 1 + cfg_.num_classes;
  std::vector<int> flat;
  flat.reserve(static_cast<std::size_t>(b) * seq);
  for (const std::vector<int>& row : inputs) {
    if (static_cast<int>(row.size()) != seq)
      throw ConfigError("prior: ragged sequence batch");
    for (int v : row) {
      if (v < 0 || v >= table_rows)
        throw ValidationError("prior: sequence symbol outside the table");
      flat.push_back(v);
    }
  }
  nn::Var x = nn::gather_rows(token_table_, flat);
  std::vector<int> positions(seq);
  std::iota(positions.begin(), positions.end(), 0);
  nn::Var x3 = nn::reshape(x, {b, seq, cfg_.embed_dim});
  x3 = nn::add_matrix_bias(x3, nn::gather_rows(pos_, positions));
  nn::Var y = transformer(nn::reshape(x3, {b * seq, cfg_.embed_dim}), b, seq,
                          /*causal=*/true);
  ++forward_calls_;
  return nn::linear(y, head_w_, head_b_);
}

nn::Var PriorModel::embed_tokens(const vq::TokenGrid& grid,
                                 const MaskState& mask, int class_id) {
  require_mode(PriorMode::kMask, "embed_tokens");
  int seq = 0;
  return embed_rows({&grid}, {&mask}, {class_id}, &seq);
}

nn::Var PriorModel::predict(const vq::TokenGrid& grid, const MaskState& mask,
                            int class_id) {
  nn::Var rows = forward_mask_rows({&grid}, {&mask}, {class_id});
  return nn::reshape(rows, {cfg_.h, cfg_.w, cfg_.chunks, cfg_.codebook_size});
}

nn::Var PriorModel::masked_nll(const nn::Var& logits,
                               const vq::TokenGrid& target,
                               const MaskState& mask) {
  require_mode(PriorMode::kMask, "masked_nll");
  check_grid(target);
  int n = entry_count();
  if (static_cast<int>(mask.mask.size()) != n)
    throw ConfigError("masked_nll: mask size does not match the grid");
  if (mask.masked_count() == 0)
    throw ArgumentError("masked_nll: no hidden entries to score");
  if (logits.value().numel() !=
      static_cast<std::int64_t>(n) * cfg_.codebook_size)
    throw ConfigError("masked_nll: logits do not match the grid geometry");
  nn::Var rows = nn::reshape(logits, {n, cfg_.codebook_size});
  return nn::cross_entropy_rows(rows, target.indices, mask.mask);
}

MaskState PriorModel::sample_training_mask(Rng& rng) {
  require_mode(PriorMode::kMask, "sample_training_mask");
  int n = entry_count();
  MaskState state;
  state.ratio = cosine_ratio(static_cast<float>(rng.uniform_open()));
  state.mask.assign(n, 0);
  for (int attempt = 0; attempt < 64; ++attempt) {
    int count = 0;
    for (int e = 0; e < n; ++e) {
      state.mask[e] = rng.uniform() < state.ratio ? 1 : 0;
      count += state.mask[e];
    }
    if (count > 0) return state;
  }
  state.mask[rng.below(n)] = 1;
  return state;
}

nn::Var PriorModel::masked_nll_batch(
    const std::vector<const vq::TokenGrid*>& grids,
    const std::vector<MaskState>& masks, const std::vector<int>& class_ids) {
  if (grids.empty() || grids.size() != masks.size() ||
      grids.size() != class_ids.size())
    throw ArgumentError("masked_nll_batch: batch lists disagree");
  std::vector<const MaskState*> mask_ptrs;
  std::vector<int> targets;
  std::vector<std::uint8_t> row_mask;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    mask_ptrs.push_back(&masks[i]);
    targets.insert(targets.end(), grids[i]->indices.begin(),
                   grids[i]->indices.end());
    row_mask.insert(row_mask.end(), masks[i].mask.begin(),
                    masks[i].mask.end());
  }
  nn::Var rows = forward_mask_rows(grids, mask_ptrs, class_ids);
  return nn::cross_entropy_rows(rows, targets, row_mask);
}

nn::Var PriorModel::causal_nll_batch(
    const std::vector<const vq::TokenGrid*>& grids,
    const std::vector<int>& class_ids) {
  require_mode(PriorMode::kAuto, "causal_nll");
  if (grids.empty() || grids.size() != class_ids.size())
    throw ArgumentError("causal_nll: batch lists disagree");
  int n = entry_count();
  std::vector<std::vector<int>> inputs;
  std::vector<int> targets;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    check_grid(*grids[i]);
    std::vector<int> seq;
    seq.push_back(control_row(class_ids[i]));
    for (int e = 0; e < n - 1; ++e) {
      int idx = grids[i]->indices[e];
      if (idx < 0 || idx >= cfg_.codebook_size)
        throw ValidationError("causal_nll: token index outside vocabulary");
      seq.push_back(idx);
    }
    inputs.push_back(std::move(seq));
    targets.insert(targets.end(), grids[i]->indices.begin(),
                   grids[i]->indices.end());
  }
  nn::Var rows = forward_auto_rows(inputs);
  return nn::cross_entropy_rows(rows, targets, {});
}

int PriorModel::control_row(int class_id) const {
  if (class_id < 0) return cfg_.codebook_size;
  if (cfg_.num_classes == 0 || class_id >= cfg_.num_classes)
    throw ConfigError("prior: class id out of range");
  return cfg_.codebook_size + 1 + class_id;
}

void PriorModel::run_unmasking(vq::TokenGrid* grid,
                               std::vector<std::uint8_t>* hidden,
                               const SampleSchedule& schedule, int class_id,
                               Rng& rng, std::ostream* debug) {
  if (schedule.steps < 1)
    throw ArgumentError("iterative_sample: step count must be at least 1");
  int n = entry_count();
  int committed = 0;
  for (int e = 0; e < n; ++e) committed += (*hidden)[e] == 0;

  struct Candidate {
    int entry;
    int value;
    double confidence;
  };
  for (int t = 1; t <= schedule.steps; ++t) {
    MaskState state;
    state.mask = *hidden;
    nn::Var logits = predict(*grid, state, class_id);
    const Tensor& rows = logits.value();

    float progress = static_cast<float>(t) / schedule.steps;
    int keep_total =
        n - static_cast<int>(
                std::ceil(static_cast<double>(cosine_ratio(progress)) * n));
    int newly = std::max(keep_total - committed, 0);
    double noise_scale =
        (1.0 - static_cast<double>(t) / schedule.steps) *
        schedule.confidence_noise;

    std::vector<Candidate> candidates;
    for (int e = 0; e < n; ++e) {
      if (!(*hidden)[e]) continue;
      double log_prob = 0.0;
      int value =
          sample_row(rows.data() + static_cast<std::int64_t>(e) *
                                       cfg_.codebook_size,
                     cfg_.codebook_size, schedule.temperature, rng, &log_prob);
      candidates.push_back({e, value, log_prob + gumbel(rng) * noise_scale});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       if (a.confidence != b.confidence)
                         return a.confidence > b.confidence;
                       return a.entry < b.entry;
                     });
    int take = std::min<int>(newly, static_cast<int>(candidates.size()));
    for (int i = 0; i < take; ++i) {
      grid->indices[candidates[i].entry] = candidates[i].value;
      (*hidden)[candidates[i].entry] = 0;
    }
    committed += take;
    if (debug != nullptr) {
      *debug << "step=" << t << " keep=" << keep_total << " committed=";
      for (int e = 0; e < n; ++e) *debug << ((*hidden)[e] ? '0' : '1');
      *debug << "\n";
    }
  }
  for (int e = 0; e < n; ++e)
    if ((*hidden)[e])
      throw NumericError("iterative_sample: schedule left hidden entries");
}

vq::TokenGrid PriorModel::iterative_sample(const SampleSchedule& schedule,
                                           int class_id, Rng& rng,
                                           std::ostream* debug) {
  require_mode(PriorMode::kMask, "iterative_sample");
  vq::TokenGrid grid;
  grid.h = cfg_.h;
  grid.w = cfg_.w;
  grid.c = cfg_.chunks;
  grid.vocab = cfg_.codebook_size;
  grid.indices.assign(entry_count(), 0);
  std::vector<std::uint8_t> hidden(entry_count(), 1);
  run_unmasking(&grid, &hidden, schedule, class_id, rng, debug);
  return grid;
}

vq::TokenGrid PriorModel::masked_reconstruct(const vq::TokenGrid& grid,
                                             float ratio, bool multistep,
                                             const SampleSchedule& schedule,
                                             Rng& rng, std::ostream* debug) {
  require_mode(PriorMode::kMask, "masked_reconstruct");
  check_grid(grid);
  if (ratio < 0.0f || ratio > 1.0f)
    throw ArgumentError("masked_reconstruct: ratio must lie in [0, 1]");
  int n = entry_count();
  int to_hide = static_cast<int>(std::floor(static_cast<double>(ratio) * n));
  vq::TokenGrid out = grid;
  if (to_hide == 0) return out;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < to_hide; ++i) {
    int j = i + rng.below(n - i);
    std::swap(order[i], order[j]);
  }
  std::vector<std::uint8_t> hidden(n, 0);
  for (int i = 0; i < to_hide; ++i) hidden[order[i]] = 1;

  if (multistep) {
    run_unmasking(&out, &hidden, schedule, -1, rng, debug);
    return out;
  }
  MaskState state;
  state.mask = hidden;
  state.ratio = ratio;
  nn::Var logits = predict(out, state, -1);
  const Tensor& rows = logits.value();
  for (int e = 0; e < n; ++e) {
    if (!hidden[e]) continue;
    const float* row =
        rows.data() + static_cast<std::int64_t>(e) * cfg_.codebook_size;
    int best = 0;
    for (int k = 1; k < cfg_.codebook_size; ++k)
      if (row[k] > row[best]) best = k;
    out.indices[e] = best;
  }
  return out;
}

vq::TokenGrid PriorModel::autoregressive_sample(
    int class_id, Rng& rng, float temperature,
    const std::vector<int>* prefix) {
  require_mode(PriorMode::kAuto, "autoregressive_sample");
  int n = entry_count();
  int forced = prefix == nullptr ? 0 : static_cast<int>(prefix->size());
  if (forced > n)
    throw ArgumentError("autoregressive_sample: prefix longer than the grid");
  vq::TokenGrid grid;
  grid.h = cfg_.h;
  grid.w = cfg_.w;
  grid.c = cfg_.chunks;
  grid.vocab = cfg_.codebook_size;
  grid.indices.assign(n, 0);

  std::vector<int> sequence;
  sequence.push_back(control_row(class_id));
  for (int t = 0; t < n; ++t) {
    nn::Var rows = forward_auto_rows({sequence});
    int value;
    if (t < forced) {
      value = (*prefix)[t];
      if (value < 0 || value >= cfg_.codebook_size)
        throw ValidationError(
            "autoregressive_sample: prefix symbol outside vocabulary");
    } else {
      const float* row = rows.value().data() +
                         static_cast<std::int64_t>(t) * cfg_.codebook_size;
      value = sample_row(row, cfg_.codebook_size, temperature, rng, nullptr);
    }
    grid.indices[t] = value;
    sequence.push_back(value);
  }
  return grid;
}

void PriorModel::save(const std::string& path) const {
  nn::Checkpoint ck;
  ck.config["model"] = "prior";
  ck.config["mode"] = prior_mode_name(cfg_.mode);
  ck.config["layers"] = std::to_string(cfg_.layers);
  ck.config["heads"] = std::to_string(cfg_.heads);
  ck.config["embed_dim"] = std::to_string(cfg_.embed_dim);
  ck.config["hidden_dim"] = std::to_string(cfg_.hidden_dim);
  ck.config["h"] = std::to_string(cfg_.h);
  ck.config["w"] = std::to_string(cfg_.w);
  ck.config["chunks"] = std::to_string(cfg_.chunks);
  ck.config["codebook_size"] = std::to_string(cfg_.codebook_size);
  ck.config["num_classes"] = std::to_string(cfg_.num_classes);
  params_.export_arrays(&ck.arrays);
  nn::save_checkpoint(path, ck);
}

PriorModel PriorModel::load(const std::string& path) {
  nn::Checkpoint ck = nn::load_checkpoint(path);
  if (ck.config_value("model") != "prior")
    throw FormatError("checkpoint at " + path + " is not a prior model");
  PriorConfig cfg;
  cfg.mode = parse_prior_mode(ck.config_value("mode"));
  cfg.layers = ck.config_int("layers");
  cfg.heads = ck.config_int("heads");
  cfg.embed_dim = ck.config_int("embed_dim");
  cfg.hidden_dim = ck.config_int("hidden_dim");
  cfg.h = ck.config_int("h");
  cfg.w = ck.config_int("w");
  cfg.chunks = ck.config_int("chunks");
  cfg.codebook_size = ck.config_int("codebook_size");
  cfg.num_classes = ck.config_int("num_classes");
  Rng rng(0);
  PriorModel model(cfg, rng);
  model.params_.import_arrays(ck.arrays);
  return model;
}

}  // namespace movq::prior
