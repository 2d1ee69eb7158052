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
//
// Acceptance gate: ten release checks, one PASS/FAIL line each. The binary
// exits nonzero when any check fails. Checks that train models reuse each
// other's artifacts (the stage-1 checkpoint feeds the prior training, and
// both feed the sampling checks), so the execution order differs from the
// reporting order; results are printed sorted at the end.
//
// Usage: acceptance <path-to-movq-cli> [workdir]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "movq/ae/autoencoder.hpp"
#include "movq/core/error.hpp"
#include "movq/core/rng.hpp"
#include "movq/core/tensor.hpp"
#include "movq/harness/config.hpp"
#include "movq/harness/dataset.hpp"
#include "movq/harness/trainer.hpp"
#include "movq/metrics/metrics.hpp"
#include "movq/nn/graph.hpp"
#include "movq/nn/ops.hpp"
#include "movq/prior/transformer.hpp"
#include "movq/vq/codebook.hpp"
#include "movq/vq/tokens.hpp"

namespace fs = std::filesystem;
using movq::Rng;
using movq::Tensor;
using movq::nn::Var;
namespace ae = movq::ae;
namespace harness = movq::harness;
namespace metrics = movq::metrics;
namespace nn = movq::nn;
namespace prior = movq::prior;
namespace vq = movq::vq;

namespace {

// ---------------------------------------------------------------------------
// Small utilities

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw CheckFailure(message);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* pattern, ...) {
  va_list args;
  va_start(args, pattern);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return std::string(buf);
}

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo, double hi) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

// One image sliced out of a (n, c, h, w) batch.
Tensor slice_image(const Tensor& batch, int index) {
  int c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  Tensor out({1, c, h, w});
  std::int64_t span = static_cast<std::int64_t>(c) * h * w;
  const float* src = batch.data() + span * index;
  std::copy(src, src + span, out.data());
  return out;
}

std::vector<vq::TokenGrid> tokenize(ae::Autoencoder* model,
                                    const harness::Dataset& dataset,
                                    const std::vector<int>& ids, int batch) {
  std::vector<vq::TokenGrid> grids;
  for (std::size_t pos = 0; pos < ids.size(); pos += batch) {
    std::size_t stop = std::min(ids.size(), pos + batch);
    std::vector<int> slice(ids.begin() + pos, ids.begin() + stop);
    Var z = model->encode(Var::leaf(dataset.stack(slice)));
    auto q = vq::quantize(z.value(), model->codebook().value(),
                          model->config().chunks);
    for (auto& g : q.indices) grids.push_back(std::move(g));
  }
  return grids;
}

// Committed-set bitstrings from the sampler debug stream, in step order.
std::vector<std::string> committed_bitstrings(const std::string& debug) {
  std::vector<std::string> out;
  std::istringstream in(debug);
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find("committed=");
    if (pos == std::string::npos) continue;
    out.push_back(line.substr(pos + 10));
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

int run_command(const std::string& command) {
  int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Artifacts shared between checks: the toy-corpus stage-1 checkpoint and the
// prior trained on its tokens.
struct SharedArtifacts {
  std::string workdir;
  std::string cli;
  harness::TrainConfig toy;  // the stage-1 toy-corpus configuration
  std::string vq_checkpoint;
  std::string prior_checkpoint;
};

harness::TrainConfig toy_config() {
  harness::TrainConfig cfg;
  cfg.dataset = "synthetic:200";
  cfg.image_size = 32;
  cfg.downsample_factor = 8;
  cfg.latent_dim = 64;
  cfg.chunks = 4;
  cfg.codebook_size = 64;
  cfg.base_width = 8;
  cfg.blocks_per_level = 1;
  cfg.modulated_levels = 3;
  cfg.batch_size = 2;
  cfg.learning_rate = 3e-4f;
  cfg.steps = 2000;
  cfg.seed = 9;
  cfg.record_every = 100;
  cfg.checkpoint_every = 100000;  // final checkpoint only
  cfg.stage = harness::Stage::kVq;
  return cfg;
}

// ---------------------------------------------------------------------------
// Check 1: quantizer indices match an exhaustive distance scan.

std::string check_quantizer_oracle(SharedArtifacts&) {
  Rng master(301);
  const int chunk_options[] = {1, 2, 4};
  int instances = 100;
  for (int trial = 0; trial < instances; ++trial) {
    Rng rng = master.child(trial);
    int chunks = chunk_options[rng.below(3)];
    int code_dim = 1 + rng.below(6);
    int codebook_size = 2 + rng.below(31);
    int h = 1 + rng.below(8), w = 1 + rng.below(8);
    Tensor latent = random_tensor(rng, {1, chunks * code_dim, h, w}, -1.5, 1.5);
    Tensor entries =
        random_tensor(rng, {codebook_size, code_dim}, -1.5, 1.5);
    if (trial % 5 == 0) {
      // Duplicate the first entry at the end to force exact ties.
      for (int t = 0; t < code_dim; ++t)
        entries.at(codebook_size - 1, t) = entries.at(0, t);
    }
    auto result = vq::quantize(latent, entries, chunks);
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j)
        for (int ch = 0; ch < chunks; ++ch) {
          int best = -1;
          float best_d = 0.0f;
          for (int k = 0; k < codebook_size; ++k) {
            float d = 0.0f;
            for (int t = 0; t < code_dim; ++t) {
              float diff = latent.at(0, ch * code_dim + t, i, j) -
                           entries.at(k, t);
              d += diff * diff;
            }
            if (best < 0 || d < best_d) {
              best_d = d;
              best = k;
            }
          }
          int got = result.indices[0].at(i, j, ch);
          require(got == best,
                  fmt("instance %d cell (%d,%d,%d): index %d, scan found %d",
                      trial, i, j, ch, got, best));
        }
  }
  return fmt("%d/100 instances match the exhaustive scan, ties keep the "
             "lowest index",
             instances);
}

// ---------------------------------------------------------------------------
// Check 2: straight-through gradient equals the downstream gradient.

std::string check_straight_through(SharedArtifacts&) {
  Rng rng(302);
  int probes = 20;
  double worst = 0.0;
  for (int probe = 0; probe < probes; ++probe) {
    Tensor pre_t = random_tensor(rng, {1, 8, 2, 2}, -1.2, 1.2);
    Tensor entries = random_tensor(rng, {6, 4}, -1.2, 1.2);
    auto q = vq::quantize(pre_t, entries, 2);

    // Smooth downstream function: sum(w * z + u * z^2) with well-scaled
    // random coefficients so no probed gradient sits near zero.
    Tensor wt(std::vector<int>{1, 8, 2, 2});
    Tensor ut(std::vector<int>{1, 8, 2, 2});
    for (std::int64_t i = 0; i < wt.numel(); ++i) {
      wt[i] = static_cast<float>((rng.below(2) ? 1.0 : -1.0) *
                                 rng.uniform(0.5, 1.5));
      ut[i] = static_cast<float>((rng.below(2) ? 1.0 : -1.0) *
                                 rng.uniform(0.25, 0.75));
    }
    auto downstream = [&](const Var& z) {
      return nn::sum_all(nn::add(nn::mul(Var::leaf(wt), z),
                                 nn::mul(Var::leaf(ut), nn::mul(z, z))));
    };

    Var pre = Var::leaf(pre_t, true);
    Var st = nn::straight_through(pre, q.z_q);
    Var loss = downstream(st);
    nn::backward(loss);
    const Tensor& grad = pre.grad();

    int j = rng.below(static_cast<int>(pre_t.numel()));
    const double step = 0.25;  // quadratic: central difference is exact
    auto eval = [&](double delta) {
      Tensor z = q.z_q;
      z[j] += static_cast<float>(delta);
      return static_cast<double>(downstream(Var::leaf(z)).value()[0]);
    };
    double fd = (eval(step) - eval(-step)) / (2.0 * step);
    double rel = std::fabs(grad[j] - fd) /
                 std::max({std::fabs(fd), std::fabs(double(grad[j])), 1e-6});
    worst = std::max(worst, rel);
    require(rel <= 1e-4,
            fmt("probe %d: grad %.8f vs finite difference %.8f (rel %.2e)",
                probe, double(grad[j]), fd, rel));
  }
  return fmt("20/20 probes match finite differences, worst relative error "
             "%.1e",
             worst);
}

// ---------------------------------------------------------------------------
// Check 3: conditional-normalization contract.

std::string check_conditional_norm(SharedArtifacts&) {
  // (a) With an identity affine head the modulated output must equal plain
  // group normalization: per-group mean ~0, variance ~1, and it must match
  // an independent double-precision reference.
  Rng rng(303);
  const int b = 2, channels = 8, h = 6, w = 6, groups = 4, latent_dim = 4;
  Tensor act(std::vector<int>{b, channels, h, w});
  for (int n = 0; n < b; ++n)
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          act.at(n, c, y, x) =
              static_cast<float>(rng.normal() * 1.7 + 0.6 * c - 1.5);
  Tensor zq = random_tensor(rng, {b, latent_dim, h, w}, -1.0, 1.0);

  ae::ModulationParams params;
  params.groups = groups;
  params.eps = 1e-6f;
  params.gamma_weight =
      Var::leaf(Tensor::zeros({channels, latent_dim, 1, 1}));
  Tensor gamma_bias(std::vector<int>{channels});
  for (int c = 0; c < channels; ++c) gamma_bias[c] = 1.0f;
  params.gamma_bias = Var::leaf(gamma_bias);
  params.beta_weight = Var::leaf(Tensor::zeros({channels, latent_dim, 1, 1}));
  params.beta_bias = Var::leaf(Tensor::zeros({channels}));

  Var out = ae::scn_modulate(Var::leaf(act), Var::leaf(zq), params);
  const Tensor& y = out.value();

  int group_span = channels / groups;
  double worst_mean = 0.0, worst_var = 0.0;
  for (int n = 0; n < b; ++n)
    for (int g = 0; g < groups; ++g) {
      double sum = 0.0, sq = 0.0;
      std::int64_t count = 0;
      for (int c = g * group_span; c < (g + 1) * group_span; ++c)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) {
            double v = y.at(n, c, yy, xx);
            sum += v;
            sq += v * v;
            ++count;
          }
      double mean = sum / count;
      double var = sq / count - mean * mean;
      worst_mean = std::max(worst_mean, std::fabs(mean));
      worst_var = std::max(worst_var, std::fabs(var - 1.0));
    }
  require(worst_mean <= 1e-4,
          fmt("group mean deviates by %.2e (allowed 1e-4)", worst_mean));
  require(worst_var <= 1e-3,
          fmt("group variance deviates by %.2e (allowed 1e-3)", worst_var));

  // Independent reference in double precision.
  double worst_diff = 0.0;
  for (int n = 0; n < b; ++n)
    for (int g = 0; g < groups; ++g) {
      double sum = 0.0, sq = 0.0;
      std::int64_t count = static_cast<std::int64_t>(group_span) * h * w;
      for (int c = g * group_span; c < (g + 1) * group_span; ++c)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) {
            double v = act.at(n, c, yy, xx);
            sum += v;
            sq += v * v;
          }
      double mean = sum / count;
      double var = sq / count - mean * mean;
      double inv = 1.0 / std::sqrt(var + params.eps);
      for (int c = g * group_span; c < (g + 1) * group_span; ++c)
        for (int yy = 0; yy < h; ++yy)
          for (int xx = 0; xx < w; ++xx) {
            double ref = (act.at(n, c, yy, xx) - mean) * inv;
            worst_diff = std::max(
                worst_diff, std::fabs(ref - double(y.at(n, c, yy, xx))));
          }
    }
  require(worst_diff <= 1e-6,
          fmt("identity-affine output differs from the reference by %.2e "
              "(allowed 1e-6)",
              worst_diff));

  // (b) The predicted scale/bias maps must live at the activation
  // resolution at every modulated site of a real decoder.
  ae::AutoencoderConfig acfg;
  acfg.image_size = 32;
  acfg.downsample_factor = 8;
  acfg.latent_dim = 16;
  acfg.chunks = 4;
  acfg.codebook_size = 16;
  acfg.base_width = 8;
  acfg.blocks_per_level = 1;
  acfg.modulated_levels = 3;
  Rng model_rng(33);
  ae::Autoencoder model(acfg, model_rng);
  Tensor z = random_tensor(rng, {1, 16, 4, 4}, -1.0, 1.0);
  std::vector<ae::ScnTrace> trace;
  model.decode(Var::leaf(z), &trace);
  require(!trace.empty(), "decoder reported no modulated sites");
  std::vector<int> resolutions;
  for (const auto& t : trace) {
    require(t.gamma_h == t.act_h && t.gamma_w == t.act_w &&
                t.beta_h == t.act_h && t.beta_w == t.act_w,
            fmt("site at %dx%d predicts scale %dx%d / bias %dx%d", t.act_h,
                t.act_w, t.gamma_h, t.gamma_w, t.beta_h, t.beta_w));
    resolutions.push_back(t.act_h);
  }
  std::sort(resolutions.begin(), resolutions.end());
  resolutions.erase(std::unique(resolutions.begin(), resolutions.end()),
                    resolutions.end());
  require(resolutions.size() >= 2,
          "modulated sites cover only one resolution");
  return fmt("group stats |mean| %.1e, |var-1| %.1e; identity-affine match "
             "%.1e; scale/bias at activation resolution across %zu sites "
             "(%zu resolutions)",
             worst_mean, worst_var, worst_diff, trace.size(),
             resolutions.size());
}

// ---------------------------------------------------------------------------
// Check 4: sampler forward-pass counts.

std::string check_sampler_counts(SharedArtifacts&) {
  // Scheduled sampler: exactly T forward passes, no mask survives, and the
  // committed set only ever grows.
  prior::PriorConfig mask_cfg;
  mask_cfg.layers = 1;
  mask_cfg.heads = 2;
  mask_cfg.embed_dim = 8;
  mask_cfg.hidden_dim = 8;
  mask_cfg.h = 16;
  mask_cfg.w = 16;
  mask_cfg.chunks = 4;
  mask_cfg.codebook_size = 4;
  mask_cfg.mode = prior::PriorMode::kMask;
  Rng init_rng(41);
  prior::PriorModel masked(mask_cfg, init_rng);

  auto run_masked = [&](int steps, std::uint64_t seed) {
    prior::SampleSchedule schedule;
    schedule.steps = steps;
    masked.reset_forward_calls();
    std::ostringstream debug;
    Rng rng(seed);
    vq::TokenGrid grid = masked.iterative_sample(schedule, -1, rng, &debug);
    require(masked.forward_calls() == steps,
            fmt("scheduled sampler made %d forward passes for %d steps",
                masked.forward_calls(), steps));
    for (int v : grid.indices)
      require(v >= 0 && v < mask_cfg.codebook_size,
              fmt("sampled index %d outside the vocabulary", v));
    auto states = committed_bitstrings(debug.str());
    require(static_cast<int>(states.size()) == steps,
            "debug stream reported a different step count");
    for (std::size_t t = 1; t < states.size(); ++t)
      for (std::size_t e = 0; e < states[t].size(); ++e)
        require(!(states[t - 1][e] == '1' && states[t][e] == '0'),
                fmt("step %zu dropped a committed token", t));
    require(std::count(states.back().begin(), states.back().end(), '1') ==
                grid.count(),
            "masks survived the final step");
    return grid;
  };
  run_masked(8, 71);
  run_masked(3, 72);

  // Preservation: entries visible before sampling are bit-identical after.
  prior::SampleSchedule schedule;
  schedule.steps = 8;
  Rng fill_rng(73);
  vq::TokenGrid source(16, 16, 4, mask_cfg.codebook_size);
  for (auto& v : source.indices) v = fill_rng.below(mask_cfg.codebook_size);
  Rng recon_rng(74);
  std::ostringstream debug;
  vq::TokenGrid filled =
      masked.masked_reconstruct(source, 0.5f, true, schedule, recon_rng,
                                &debug);
  auto states = committed_bitstrings(debug.str());
  require(!states.empty(), "reconstruction produced no debug stream");
  const std::string& initial = states.front();
  std::int64_t preserved = 0;
  for (std::size_t e = 0; e < initial.size(); ++e)
    if (initial[e] == '1') {
      require(filled.indices[e] == source.indices[e],
              fmt("visible token %zu changed during reconstruction", e));
      ++preserved;
    }
  require(preserved > 0, "no token was visible at half masking");

  // Sequential sampler: exactly one forward pass per grid entry.
  auto run_auto = [&](int h, int w, int chunks) {
    prior::PriorConfig cfg;
    cfg.layers = 1;
    cfg.heads = 1;
    cfg.embed_dim = 4;
    cfg.hidden_dim = 8;
    cfg.h = h;
    cfg.w = w;
    cfg.chunks = chunks;
    cfg.codebook_size = 4;
    cfg.mode = prior::PriorMode::kAuto;
    Rng rng(42);
    prior::PriorModel model(cfg, rng);
    model.reset_forward_calls();
    Rng sample_rng(43);
    vq::TokenGrid grid = model.autoregressive_sample(-1, sample_rng);
    require(model.forward_calls() == h * w * chunks,
            fmt("sequential sampler made %d forward passes for %d entries",
                model.forward_calls(), h * w * chunks));
    for (int v : grid.indices)
      require(v >= 0 && v < cfg.codebook_size,
              fmt("sequential sample index %d outside the vocabulary", v));
    return model.forward_calls();
  };
  int full_scale_calls = run_auto(16, 16, 4);
  require(full_scale_calls == 1024, "16x16x4 grid did not take 1024 passes");
  run_auto(2, 2, 2);

  return fmt("scheduled sampler: T passes (T=8, T=3), zero leftover masks, "
             "committed set monotone, %lld visible tokens preserved; "
             "sequential sampler: one pass per entry (1024 at 16x16x4, 8 at "
             "2x2x2)",
             static_cast<long long>(preserved));
}

// ---------------------------------------------------------------------------
// Check 5: masked-objective calibration and training reduction.

std::string check_prior_training(SharedArtifacts& shared) {
  require(!shared.vq_checkpoint.empty(),
          "prerequisite missing: stage-1 toy checkpoint was not produced");
  auto t0 = std::chrono::steady_clock::now();
  const double ln_k = std::log(64.0);

  // Calibration: uniform logits must score exactly ln K on any mask.
  prior::PriorConfig tiny;
  tiny.layers = 1;
  tiny.heads = 1;
  tiny.embed_dim = 8;
  tiny.hidden_dim = 8;
  tiny.h = 4;
  tiny.w = 4;
  tiny.chunks = 4;
  tiny.codebook_size = 64;
  Rng tiny_rng(50);
  prior::PriorModel calibrator(tiny, tiny_rng);
  Var logits = Var::leaf(Tensor::zeros({4, 4, 4, 64}));
  vq::TokenGrid target(4, 4, 4, 64);
  Rng target_rng(51);
  for (auto& v : target.indices) v = target_rng.below(64);
  prior::MaskState mask;
  mask.ratio = 0.5f;
  mask.mask.resize(target.indices.size());
  for (std::size_t e = 0; e < mask.mask.size(); ++e)
    mask.mask[e] = static_cast<std::uint8_t>(e % 2);
  double uniform_nll =
      calibrator.masked_nll(logits, target, mask).value()[0];
  require(std::fabs(uniform_nll - ln_k) <= 1e-6,
          fmt("uniform logits scored %.8f, expected ln K = %.8f", uniform_nll,
              ln_k));

  // Training: the masked objective must fall at least 30% below ln K.
  harness::TrainConfig cfg = shared.toy;
  cfg.stage = harness::Stage::kPriorMask;
  cfg.prior_layers = 2;
  cfg.prior_heads = 4;
  cfg.prior_embed_dim = 64;
  cfg.prior_hidden_dim = 128;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-3f;
  cfg.steps = 2000;
  harness::TrainResult result =
      harness::train_prior(cfg, shared.vq_checkpoint,
                           shared.workdir + "/prior");
  shared.prior_checkpoint = result.checkpoint_path;
  prior::PriorModel trained = prior::PriorModel::load(result.checkpoint_path);

  // Fixed evaluation set: 16 corpus grids under seeded half masks.
  ae::Autoencoder vq_model = ae::Autoencoder::load(shared.vq_checkpoint);
  harness::Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed);
  std::vector<int> eval_ids(16);
  for (int i = 0; i < 16; ++i) eval_ids[i] = i;
  auto grids = tokenize(&vq_model, dataset, eval_ids, 8);
  Rng mask_rng(555);
  double total = 0.0;
  for (const auto& grid : grids) {
    prior::MaskState eval_mask;
    eval_mask.ratio = 0.5f;
    eval_mask.mask.assign(grid.indices.size(), 0);
    int hidden = 0;
    while (hidden == 0) {
      hidden = 0;
      for (auto& bit : eval_mask.mask) {
        bit = static_cast<std::uint8_t>(mask_rng.below(2));
        hidden += bit;
      }
    }
    Var grid_logits = trained.predict(grid, eval_mask);
    total += trained.masked_nll(grid_logits, grid, eval_mask).value()[0];
  }
  double eval_nll = total / static_cast<double>(grids.size());
  double reduction = 1.0 - eval_nll / ln_k;
  double wall = seconds_since(t0);
  require(reduction >= 0.30,
          fmt("masked objective fell only %.1f%% from ln K (%.4f -> %.4f)",
              100.0 * reduction, ln_k, eval_nll));
  require(wall < 900.0, fmt("check took %.0f s (allowed 900)", wall));

  return fmt("uniform logits score ln K within %.1e; training cut the "
             "masked objective %.0f%% below ln K (%.4f -> %.4f) in %d steps",
             std::fabs(uniform_nll - ln_k), 100.0 * reduction, ln_k, eval_nll,
             cfg.steps);
}

// ---------------------------------------------------------------------------
// Check 6: end-to-end stage-1 training on the toy corpus.

std::string check_stage1_training(SharedArtifacts& shared) {
  auto t0 = std::chrono::steady_clock::now();
  harness::TrainConfig cfg = shared.toy;
  harness::Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed);
  std::vector<int> eval_ids(32);
  for (int i = 0; i < 32; ++i) eval_ids[i] = i;

  // The untrained baseline uses the same seed the trainer will use, so the
  // comparison starts from the identical initialization.
  ae::AutoencoderConfig acfg = harness::autoencoder_config(cfg);
  Rng init_rng(cfg.seed);
  ae::Autoencoder untrained(acfg, init_rng);
  metrics::MetricsReport before =
      harness::evaluate_reconstruction(&untrained, dataset, eval_ids, 8);

  harness::TrainResult result =
      harness::train_vq(cfg, shared.workdir + "/stage1");
  // Publish the artifact before the bar checks: the checks that consume the
  // checkpoint only need a frozen stage-1, not one that cleared this bar.
  shared.vq_checkpoint = result.checkpoint_path;
  ae::Autoencoder trained = ae::Autoencoder::load(result.checkpoint_path);
  metrics::MetricsReport after =
      harness::evaluate_reconstruction(&trained, dataset, eval_ids, 8);

  double wall = seconds_since(t0);
  require(after.mse <= 0.5 * before.mse,
          fmt("MSE %.4f is %.0f%% of the untrained %.4f (needs <= 50%%)",
              after.mse, 100.0 * after.mse / before.mse, before.mse));
  require(after.perplexity > 4.0,
          fmt("codebook perplexity %.2f (needs > 4)", after.perplexity));
  require(wall < 900.0, fmt("check took %.0f s (allowed 900)", wall));

  return fmt("MSE %.4f -> %.4f (%.0f%% of untrained) over %d steps, "
             "perplexity %.1f, %.0f s",
             before.mse, after.mse, 100.0 * after.mse / before.mse, cfg.steps,
             after.perplexity, wall);
}

// ---------------------------------------------------------------------------
// Check 7: multichannel advantage at matched budgets.

std::string check_multichannel_trend(SharedArtifacts& shared) {
  harness::TrainConfig base;
  base.dataset = "synthetic:48";
  base.image_size = 16;
  base.downsample_factor = 4;
  base.latent_dim = 16;
  base.codebook_size = 32;
  base.base_width = 8;
  base.blocks_per_level = 1;
  base.modulated_levels = 3;
  base.batch_size = 4;
  base.learning_rate = 3e-4f;
  base.steps = 400;
  base.record_every = 200;
  base.checkpoint_every = 100000;

  std::vector<int> train_ids, eval_ids;
  for (int i = 0; i < 36; ++i) train_ids.push_back(i);
  for (int i = 36; i < 48; ++i) eval_ids.push_back(i);

  auto median_mse = [&](int chunks) {
    std::vector<double> runs;
    for (int trial = 0; trial < 3; ++trial) {
      harness::TrainConfig cfg = base;
      cfg.chunks = chunks;
      cfg.seed = 120 + trial;
      std::string dir = shared.workdir + "/trend_c" +
                        std::to_string(chunks) + "_s" + std::to_string(trial);
      harness::TrainResult result =
          harness::train_vq(cfg, dir, "", nullptr, &train_ids);
      ae::Autoencoder model = ae::Autoencoder::load(result.checkpoint_path);
      harness::Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed);
      metrics::MetricsReport report =
          harness::evaluate_reconstruction(&model, dataset, eval_ids, 12);
      runs.push_back(report.mse);
    }
    std::sort(runs.begin(), runs.end());
    return runs[1];
  };

  double single = median_mse(1);
  double multi = median_mse(4);
  require(multi <= 1.05 * single,
          fmt("median held-out MSE %.5f (c=4) vs %.5f (c=1) exceeds the 5%% "
              "slack",
              multi, single));
  return fmt("median held-out MSE over 3 seeds: %.5f with 4 chunks vs %.5f "
             "with 1 (matched %d-step budgets)",
             multi, single, base.steps);
}

// ---------------------------------------------------------------------------
// Check 8: masking-ratio sweep and sample diversity.

std::string check_ratio_sweep(SharedArtifacts& shared) {
  require(!shared.vq_checkpoint.empty() && !shared.prior_checkpoint.empty(),
          "prerequisite missing: toy checkpoints were not produced");
  ae::Autoencoder vq_model = ae::Autoencoder::load(shared.vq_checkpoint);
  prior::PriorModel prior_model =
      prior::PriorModel::load(shared.prior_checkpoint);
  harness::Dataset dataset(shared.toy.dataset, shared.toy.image_size,
                           shared.toy.seed);
  std::vector<int> ids(8);
  for (int i = 0; i < 8; ++i) ids[i] = i;
  auto grids = tokenize(&vq_model, dataset, ids, 8);

  prior::SampleSchedule schedule;
  schedule.steps = 8;

  const float ratios[] = {0.95f, 0.6f, 0.2f};
  double sweep[3] = {0.0, 0.0, 0.0};
  for (int r = 0; r < 3; ++r) {
    Rng rng(880 + r);
    double total = 0.0;
    for (const auto& grid : grids) {
      vq::TokenGrid filled =
          prior_model.masked_reconstruct(grid, ratios[r], false, schedule,
                                         rng);
      Tensor full = vq_model.decode_tokens({grid});
      Tensor part = vq_model.decode_tokens({filled});
      total += metrics::mse(part, full);
    }
    sweep[r] = total / static_cast<double>(grids.size());
  }
  require(sweep[0] > sweep[1] && sweep[1] > sweep[2],
          fmt("top-1 fill error not monotone: %.3e (r=0.95), %.3e (r=0.6), "
              "%.3e (r=0.2)",
              sweep[0], sweep[1], sweep[2]));

  std::vector<Tensor> samples;
  for (int s = 0; s < 4; ++s) {
    Rng rng(9000 + s);
    vq::TokenGrid drawn =
        prior_model.masked_reconstruct(grids[0], 1.0f, true, schedule, rng);
    samples.push_back(vq_model.decode_tokens({drawn}));
  }
  double spread = metrics::diversity(samples);
  require(spread > 0.0, "fully-masked multistep draws were identical");
  return fmt("top-1 fill error falls with the masking ratio: %.3e -> %.3e "
             "-> %.3e at r = 0.95/0.6/0.2; diversity %.3e across 4 seeds at "
             "r = 1.0",
             sweep[0], sweep[1], sweep[2], spread);
}

// ---------------------------------------------------------------------------
// Check 9: compression-ratio arithmetic.

std::string check_compression_ratio(SharedArtifacts&) {
  double ratio = harness::compression_ratio(256, 16, 4);
  require(ratio == 192.0,
          fmt("256/f=16/c=4 reported %.10g, expected exactly 192", ratio));
  double toy = harness::compression_ratio(32, 8, 4);
  require(toy == 48.0, fmt("32/f=8/c=4 reported %.10g, expected 48", toy));
  return "256x256 / f=16 / c=4 reports exactly 192 scalars per token";
}

// ---------------------------------------------------------------------------
// Check 10: byte-identical seeded sampling through the CLI.

std::string check_sampling_determinism(SharedArtifacts& shared) {
  require(!shared.vq_checkpoint.empty() && !shared.prior_checkpoint.empty(),
          "prerequisite missing: toy checkpoints were not produced");
  require(fs::exists(shared.cli),
          "CLI binary not found at " + shared.cli);
  std::string dir_a = shared.workdir + "/determinism_a";
  std::string dir_b = shared.workdir + "/determinism_b";
  for (const std::string& dir : {dir_a, dir_b}) {
    std::string command = "\"" + shared.cli + "\" sample --prior \"" +
                          shared.prior_checkpoint + "\" --vq \"" +
                          shared.vq_checkpoint +
                          "\" --seed 7 --count 3 --steps 4 --out \"" + dir +
                          "\" > /dev/null 2>&1";
    int code = run_command(command);
    require(code == 0, fmt("sample run into %s exited with %d",
                           dir.c_str(), code));
  }
  int compared = 0;
  for (int i = 0; i < 3; ++i) {
    std::string name = fmt("/sample_%03d.movqtoks", i);
    auto bytes_a = read_bytes(dir_a + name);
    auto bytes_b = read_bytes(dir_b + name);
    require(!bytes_a.empty(), "token file is empty");
    require(bytes_a == bytes_b,
            fmt("token file %s differs between runs", name.c_str()));
    ++compared;
  }
  return fmt("two `sample --seed 7` runs wrote %d byte-identical token "
             "files",
             compared);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-movq-cli> [workdir]\n";
    return 2;
  }
  SharedArtifacts shared;
  shared.cli = fs::absolute(argv[1]).string();
  shared.workdir =
      fs::absolute(argc > 2 ? argv[2] : "acceptance_workdir").string();
  std::error_code ec;
  fs::remove_all(shared.workdir, ec);
  fs::create_directories(shared.workdir);
  shared.toy = toy_config();

  struct Check {
    int id;
    const char* title;
    std::function<std::string(SharedArtifacts&)> run;
  };
  // Execution order front-loads the quick property checks, then trains the
  // shared toy models before the checks that consume them.
  const std::vector<Check> checks = {
      {1, "quantizer matches the exhaustive scan", check_quantizer_oracle},
      {2, "straight-through gradient vs finite differences",
       check_straight_through},
      {3, "conditional normalization contract", check_conditional_norm},
      {4, "sampler forward-pass counts", check_sampler_counts},
      {9, "compression-ratio arithmetic", check_compression_ratio},
      {6, "stage-1 training on the toy corpus", check_stage1_training},
      {5, "masked objective calibration and reduction", check_prior_training},
      {8, "masking-ratio sweep and sample diversity", check_ratio_sweep},
      {10, "byte-identical seeded sampling", check_sampling_determinism},
      {7, "multichannel advantage at matched budgets",
       check_multichannel_trend},
  };

  struct Outcome {
    bool pass = false;
    std::string title;
    std::string detail;
    double seconds = 0.0;
  };
  std::vector<Outcome> outcomes(checks.size() + 1);

  for (const auto& check : checks) {
    std::cerr << "[acceptance] running check " << check.id << ": "
              << check.title << "\n";
    auto t0 = std::chrono::steady_clock::now();
    Outcome& outcome = outcomes[check.id];
    outcome.title = check.title;
    try {
      outcome.detail = check.run(shared);
      outcome.pass = true;
    } catch (const std::exception& e) {
      outcome.detail = e.what();
      outcome.pass = false;
    }
    outcome.seconds = seconds_since(t0);
    std::cerr << "[acceptance] check " << check.id
              << (outcome.pass ? " passed" : " FAILED") << " in "
              << fmt("%.1f", outcome.seconds) << " s\n";
  }

  int passed = 0;
  for (std::size_t id = 1; id < outcomes.size(); ++id) {
    const Outcome& outcome = outcomes[id];
    std::printf("criterion %2zu %s %s — %s (%.1f s)\n", id,
                outcome.pass ? "PASS" : "FAIL", outcome.title.c_str(),
                outcome.detail.c_str(), outcome.seconds);
    if (outcome.pass) ++passed;
  }
  std::printf("%d/10 criteria passed\n", passed);
  return passed == 10 ? 0 : 1;
}
