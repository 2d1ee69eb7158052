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

#ifndef MOVQ_PRIOR_TRANSFORMER_HPP_
#define MOVQ_PRIOR_TRANSFORMER_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include "movq/core/rng.hpp"
#include "movq/nn/graph.hpp"
#include "movq/nn/params.hpp"
#include "movq/vq/tokens.hpp"

namespace movq::prior {

enum class PriorMode { kMask, kAuto };

PriorMode parse_prior_mode(const std::string& name);
std::string prior_mode_name(PriorMode mode);

struct PriorConfig {
  int layers = 8;
  int heads = 8;
  int embed_dim = 256;
  int hidden_dim = 1024;
  int h = 4, w = 4;
  int chunks = 4;          // channels per grid cell
  int codebook_size = 64;  // categorical vocabulary per entry
  int num_classes = 0;     // 0 = unconditional
  PriorMode mode = PriorMode::kMask;
};

/// true = hidden. Entries are position-major, channel-minor, matching
/// TokenGrid storage.
struct MaskState {
  std::vector<std::uint8_t> mask;
  float ratio = 0.0f;
  int masked_count() const;
};

struct SampleSchedule {
  int steps = 8;
  float temperature = 1.0f;
  float confidence_noise = 4.0f;
};

/// Cosine mask-ratio schedule: 1 at u<=0, cos(pi*u/2) between, exactly 0 at
/// u>=1 so the final step never leaves a mask behind.
float cosine_ratio(float u);

class PriorModel {
 public:
  PriorModel(const PriorConfig& cfg, Rng& rng);

  const PriorConfig& config() const { return cfg_; }
  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  int entry_count() const { return cfg_.h * cfg_.w * cfg_.chunks; }
  /// Model evaluations since the last reset; one per predict or per
  /// autoregressive step.
  int forward_calls() const { return forward_calls_; }
  void reset_forward_calls() { forward_calls_ = 0; }

  /// Per-position embeddings: the per-channel index embeddings (hidden
  /// entries replaced by the channel's mask embedding) concatenated, plus
  /// the positional code; class token prepended when class_id >= 0.
  /// Returns (positions, embed_dim) rows.
  nn::Var embed_tokens(const vq::TokenGrid& grid, const MaskState& mask,
                       int class_id = -1);

  /// One bidirectional forward pass -> (h, w, chunks, vocab) logits.
  nn::Var predict(const vq::TokenGrid& grid, const MaskState& mask,
                  int class_id = -1);

  /// Mean cross-entropy over the hidden entries only.
  nn::Var masked_nll(const nn::Var& logits, const vq::TokenGrid& target,
                     const MaskState& mask);

  /// Bernoulli(r) mask with r = cosine_ratio(u), redrawn until nonempty.
  MaskState sample_training_mask(Rng& rng);

  /// Batched training objective for the mask mode.
  nn::Var masked_nll_batch(const std::vector<const vq::TokenGrid*>& grids,
                           const std::vector<MaskState>& masks,
                           const std::vector<int>& class_ids);

  /// Batched next-symbol objective for the auto mode.
  nn::Var causal_nll_batch(const std::vector<const vq::TokenGrid*>& grids,
                           const std::vector<int>& class_ids);

  /// Confidence-scheduled unmasking from a fully hidden grid; exactly
  /// schedule.steps forward passes. Debug lines go to `debug` when given.
  vq::TokenGrid iterative_sample(const SampleSchedule& schedule, int class_id,
                                 Rng& rng, std::ostream* debug = nullptr);

  /// Hides floor(ratio * n) random entries of `grid`, then fills them:
  /// top1 = one forward + argmax; multistep = the iterative sampler seeded
  /// with the visible entries as committed. Visible entries are preserved.
  vq::TokenGrid masked_reconstruct(const vq::TokenGrid& grid, float ratio,
                                   bool multistep,
                                   const SampleSchedule& schedule, Rng& rng,
                                   std::ostream* debug = nullptr);

  /// Strict next-symbol sampling, one forward per entry. `prefix` forces
  /// the first prefix->size() entries. Throws ModeError on a mask-mode
  /// model.
  vq::TokenGrid autoregressive_sample(int class_id, Rng& rng,
                                      float temperature = 1.0f,
                                      const std::vector<int>* prefix =
                                          nullptr);

  void save(const std::string& path) const;
  static PriorModel load(const std::string& path);

 private:
  struct Block {
    nn::Var ln1_g, ln1_b;
    nn::Var wq, bq, wk, bk, wv, bv, wo, bo;
    nn::Var ln2_g, ln2_b;
    nn::Var w1, b1, w2, b2;
  };

  void require_mode(PriorMode mode, const char* op) const;
  void check_grid(const vq::TokenGrid& grid) const;
  nn::Var embed_rows(const std::vector<const vq::TokenGrid*>& grids,
                     const std::vector<const MaskState*>& masks,
                     const std::vector<int>& class_ids, int* seq_len);
  nn::Var transformer(const nn::Var& x, int batch, int seq, bool causal);
  /// (batch * n, vocab) logit rows, position-major channel-minor.
  nn::Var forward_mask_rows(const std::vector<const vq::TokenGrid*>& grids,
                            const std::vector<const MaskState*>& masks,
                            const std::vector<int>& class_ids);
  /// (batch * seq, vocab) logit rows for token sequences that already start
  /// with their control symbol.
  nn::Var forward_auto_rows(const std::vector<std::vector<int>>& inputs);
  void run_unmasking(vq::TokenGrid* grid, std::vector<std::uint8_t>* hidden,
                     const SampleSchedule& schedule, int class_id, Rng& rng,
                     std::ostream* debug);
  int control_row(int class_id) const;

  PriorConfig cfg_;
  nn::ParamStore params_;
  int forward_calls_ = 0;

  std::vector<nn::Var> channel_tables_;  // mask mode, (vocab + 1, per-chan)
  nn::Var token_table_;                  // auto mode
  nn::Var pos_;
  nn::Var class_table_;
  std::vector<Block> blocks_;
  nn::Var ln_f_g_, ln_f_b_;
  nn::Var head_w_, head_b_;
};

}  // namespace movq::prior

#endif  // MOVQ_PRIOR_TRANSFORMER_HPP_
