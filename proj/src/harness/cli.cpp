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

#include "movq/harness/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "movq/ae/autoencoder.hpp"
#include "movq/core/error.hpp"
#include "movq/core/rng.hpp"
#include "movq/harness/config.hpp"
#include "movq/harness/dataset.hpp"
#include "movq/harness/trainer.hpp"
#include "movq/io/image.hpp"
#include "movq/metrics/metrics.hpp"
#include "movq/nn/graph.hpp"
#include "movq/prior/transformer.hpp"
#include "movq/vq/codebook.hpp"
#include "movq/vq/tokens.hpp"

namespace movq::harness {

namespace {

namespace fs = std::filesystem;
using nn::Var;

struct CliOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::string vq_path;
  std::string prior_path;
  std::string resume_path;
  std::uint64_t seed = 0;
  int steps = 0;
  int count = 8;
  float ratio = 0.5f;
  std::string mode = "multistep";
  std::string axis;
  bool verbose = false;
};

bool flag_given(const CLI::App* sub, const std::string& name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

TrainConfig effective_config(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg;
  if (!opts.config_path.empty()) cfg = load_train_config(opts.config_path);
  if (flag_given(sub, "--seed")) cfg.seed = opts.seed;
  if (flag_given(sub, "--steps")) cfg.steps = opts.steps;
  return cfg;
}

void check_pair_geometry(const prior::PriorConfig& prior_cfg,
                         const ae::AutoencoderConfig& vq_cfg) {
  int side = vq_cfg.image_size / vq_cfg.downsample_factor;
  if (prior_cfg.h != side || prior_cfg.w != side ||
      prior_cfg.chunks != vq_cfg.chunks ||
      prior_cfg.codebook_size != vq_cfg.codebook_size)
    throw ConfigError(
        "prior checkpoint grid " + std::to_string(prior_cfg.h) + "x" +
        std::to_string(prior_cfg.w) + "x" + std::to_string(prior_cfg.chunks) +
        " (vocab " + std::to_string(prior_cfg.codebook_size) +
        ") does not match the stage-1 checkpoint's " + std::to_string(side) +
        "x" + std::to_string(side) + "x" + std::to_string(vq_cfg.chunks) +
        " (vocab " + std::to_string(vq_cfg.codebook_size) + ")");
}

std::vector<int> leading_ids(int available, int requested) {
  int n = std::min(available, requested);
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  return ids;
}

std::vector<vq::TokenGrid> tokenize(ae::Autoencoder* model,
                                    const Dataset& dataset,
                                    const std::vector<int>& ids) {
  std::vector<vq::TokenGrid> grids;
  grids.reserve(ids.size());
  const int batch = 16;
  for (std::size_t at = 0; at < ids.size();
       at += static_cast<std::size_t>(batch)) {
    std::vector<int> part(
        ids.begin() + at,
        ids.begin() + std::min(at + batch, ids.size()));
    Var z = model->encode(Var::leaf(dataset.stack(part)));
    vq::QuantizeResult q = vq::quantize(z.value(), model->codebook().value(),
                                        model->config().chunks);
    for (auto& g : q.indices) grids.push_back(std::move(g));
  }
  return grids;
}

Tensor image_of_batch(const Tensor& batch, int i) {
  Tensor out({batch.dim(1), batch.dim(2), batch.dim(3)});
  const float* src = batch.data() + i * out.numel();
  std::copy(src, src + out.numel(), out.data());
  return out;
}

int grid_columns(int n) {
  return std::max(1, static_cast<int>(std::ceil(std::sqrt(
                         static_cast<double>(n)))));
}

int cmd_train_vq(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  cfg.stage = Stage::kVq;
  TrainResult result = train_vq(cfg, opts.out_dir, opts.resume_path,
                                opts.verbose ? &std::cout : nullptr);
  std::cout << "final " << format_run_record(result.last()) << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_train_prior(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  if (cfg.stage == Stage::kVq) cfg.stage = Stage::kPriorMask;
  TrainResult result = train_prior(cfg, opts.vq_path, opts.out_dir,
                                   opts.resume_path,
                                   opts.verbose ? &std::cout : nullptr);
  std::cout << "final " << format_run_record(result.last()) << "\n";
  std::cout << "checkpoint: " << result.checkpoint_path << "\n";
  return 0;
}

int cmd_reconstruct(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  ae::Autoencoder model = ae::Autoencoder::load(opts.vq_path);
  Dataset dataset(cfg.dataset, model.config().image_size, cfg.seed);
  std::vector<int> ids = leading_ids(dataset.size(), opts.count);
  fs::create_directories(opts.out_dir);

  std::vector<Tensor> tiles;
  for (std::size_t at = 0; at < ids.size(); at += 16) {
    std::vector<int> part(ids.begin() + at,
                          ids.begin() + std::min(at + 16, ids.size()));
    Var x = Var::leaf(dataset.stack(part));
    ae::ReconstructResult r = model.reconstruct(x);
    for (std::size_t i = 0; i < part.size(); ++i) {
      tiles.push_back(image_of_batch(x.value(), static_cast<int>(i)));
      tiles.push_back(
          image_of_batch(r.reconstruction.value(), static_cast<int>(i)));
    }
  }
  std::string png = opts.out_dir + "/reconstructions.png";
  io::write_png(png, io::tile_grid(tiles, 8));

  metrics::MetricsReport report = evaluate_reconstruction(
      &model, dataset, ids, std::min<int>(16, static_cast<int>(ids.size())));
  std::string text = metrics::format_report(report);
  std::cout << text;
  std::ofstream(opts.out_dir + "/metrics.txt") << text;
  std::cout << "wrote " << png << "\n";
  return 0;
}

int cmd_sample(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  ae::Autoencoder vq_model = ae::Autoencoder::load(opts.vq_path);
  prior::PriorModel prior_model = prior::PriorModel::load(opts.prior_path);
  check_pair_geometry(prior_model.config(), vq_model.config());
  fs::create_directories(opts.out_dir);

  prior::SampleSchedule schedule;
  schedule.steps = flag_given(sub, "--steps") ? opts.steps : cfg.sample_steps;
  schedule.temperature = cfg.temperature;
  schedule.confidence_noise = cfg.confidence_noise;

  Rng rng(cfg.seed);
  std::vector<vq::TokenGrid> grids;
  for (int i = 0; i < opts.count; ++i) {
    vq::TokenGrid grid;
    if (prior_model.config().mode == prior::PriorMode::kMask) {
      grid = prior_model.iterative_sample(schedule, -1, rng,
                                          opts.verbose ? &std::cerr
                                                       : nullptr);
    } else {
      grid = prior_model.autoregressive_sample(-1, rng, cfg.temperature);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%03d.movqtoks", i);
    vq::write_tokens_file(opts.out_dir + "/" + name, grid);
    grids.push_back(std::move(grid));
  }

  Tensor decoded = vq_model.decode_tokens(grids);
  std::vector<Tensor> tiles;
  for (int i = 0; i < opts.count; ++i)
    tiles.push_back(image_of_batch(decoded, i));
  std::string png = opts.out_dir + "/samples.png";
  io::write_png(png, io::tile_grid(tiles, grid_columns(opts.count)));
  std::cout << "wrote " << opts.count << " token grids and " << png << "\n";
  return 0;
}

int cmd_masked_recon(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  ae::Autoencoder vq_model = ae::Autoencoder::load(opts.vq_path);
  prior::PriorModel prior_model = prior::PriorModel::load(opts.prior_path);
  check_pair_geometry(prior_model.config(), vq_model.config());
  Dataset dataset(cfg.dataset, vq_model.config().image_size, cfg.seed);
  std::vector<int> ids = leading_ids(dataset.size(), opts.count);
  fs::create_directories(opts.out_dir);

  prior::SampleSchedule schedule;
  schedule.steps = flag_given(sub, "--steps") ? opts.steps : cfg.sample_steps;
  schedule.temperature = cfg.temperature;
  schedule.confidence_noise = cfg.confidence_noise;
  bool multistep = opts.mode == "multistep";

  Rng rng(cfg.seed);
  std::vector<vq::TokenGrid> grids = tokenize(&vq_model, dataset, ids);
  std::vector<Tensor> tiles;
  double mse_sum = 0.0;
  for (std::size_t i = 0; i < grids.size(); ++i) {
    vq::TokenGrid filled = prior_model.masked_reconstruct(
        grids[i], opts.ratio, multistep, schedule, rng,
        opts.verbose ? &std::cerr : nullptr);
    Tensor full = vq_model.decode_tokens({grids[i]});
    Tensor partial = vq_model.decode_tokens({filled});
    Tensor full_img = image_of_batch(full, 0);
    Tensor partial_img = image_of_batch(partial, 0);
    mse_sum += metrics::mse(full_img, partial_img);
    tiles.push_back(dataset.image(ids[i]));
    tiles.push_back(std::move(full_img));
    tiles.push_back(std::move(partial_img));
  }
  std::string png = opts.out_dir + "/masked_recon.png";
  io::write_png(png, io::tile_grid(tiles, 6));
  std::printf("ratio=%g mode=%s mse_vs_full=%.6g\n",
              static_cast<double>(opts.ratio), opts.mode.c_str(),
              mse_sum / static_cast<double>(grids.size()));
  std::cout << "wrote " << png << "\n";
  return 0;
}

int cmd_eval(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  ae::Autoencoder model = ae::Autoencoder::load(opts.vq_path);
  Dataset dataset(cfg.dataset, model.config().image_size, cfg.seed);
  std::vector<int> ids =
      flag_given(sub, "--count") ? leading_ids(dataset.size(), opts.count)
                                : dataset.all_ids();
  fs::create_directories(opts.out_dir);

  metrics::MetricsReport report = evaluate_reconstruction(
      &model, dataset, ids, std::min<int>(16, static_cast<int>(ids.size())));
  std::ostringstream text;
  text << metrics::format_report(report);
  const ae::AutoencoderConfig& mc = model.config();
  text << "compression_ratio="
       << compression_ratio(mc.image_size, mc.downsample_factor, mc.chunks)
       << "\n";

  if (!opts.prior_path.empty()) {
    prior::PriorModel prior_model = prior::PriorModel::load(opts.prior_path);
    check_pair_geometry(prior_model.config(), model.config());
    std::vector<vq::TokenGrid> grids = tokenize(&model, dataset, ids);
    std::vector<const vq::TokenGrid*> ptrs;
    for (const auto& g : grids) ptrs.push_back(&g);
    std::vector<int> class_ids(grids.size(), -1);
    if (prior_model.config().mode == prior::PriorMode::kMask) {
      Rng rng(cfg.seed);
      std::vector<prior::MaskState> masks;
      int n = static_cast<int>(grids.front().count());
      for (std::size_t i = 0; i < grids.size(); ++i) {
        prior::MaskState m;
        m.ratio = 0.5f;
        m.mask.assign(n, 0);
        for (int e = 0; e < n; ++e) m.mask[e] = rng.below(2);
        if (m.masked_count() == 0) m.mask[rng.below(n)] = 1;
        masks.push_back(std::move(m));
      }
      Var nll = prior_model.masked_nll_batch(ptrs, masks, class_ids);
      text << "masked_nll=" << nll.value()[0] << "\n";
    } else {
      Var nll = prior_model.causal_nll_batch(ptrs, class_ids);
      text << "causal_nll=" << nll.value()[0] << "\n";
    }
  }

  std::cout << text.str();
  std::ofstream(opts.out_dir + "/metrics.txt") << text.str();
  return 0;
}

int cmd_experiment(const CliOptions& opts, const CLI::App* sub) {
  TrainConfig cfg = effective_config(opts, sub);
  ExperimentAxis axis = parse_axis(opts.axis);
  std::string table = run_experiment(axis, cfg, opts.out_dir,
                                     opts.verbose ? &std::cout : nullptr);
  if (!opts.verbose) std::cout << table;
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Multichannel vector-quantized image modeling"};
  app.require_subcommand(1);
  CliOptions opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path,
                    "Flat key=value configuration file");
    sub->add_option("--seed", opts.seed, "Random seed override");
    sub->add_option("--out", opts.out_dir, "Output directory")
        ->capture_default_str();
    sub->add_flag("--verbose", opts.verbose, "Chatty progress output");
    return sub;
  };

  CLI::App* train_vq_cmd =
      add_common(app.add_subcommand("train-vq", "Train the stage-1 "
                                                "autoencoder"));
  train_vq_cmd->add_option("--steps", opts.steps, "Training step budget");
  train_vq_cmd->add_option("--resume", opts.resume_path,
                           "Continue from a training checkpoint");

  CLI::App* train_prior_cmd =
      add_common(app.add_subcommand("train-prior", "Train the stage-2 "
                                                   "token prior"));
  train_prior_cmd->add_option("--steps", opts.steps, "Training step budget");
  train_prior_cmd->add_option("--vq", opts.vq_path, "Stage-1 checkpoint")
      ->required();
  train_prior_cmd->add_option("--resume", opts.resume_path,
                              "Continue from a training checkpoint");

  CLI::App* reconstruct_cmd =
      add_common(app.add_subcommand("reconstruct", "Reconstruct corpus "
                                                   "images"));
  reconstruct_cmd->add_option("--vq", opts.vq_path, "Stage-1 checkpoint")
      ->required();
  reconstruct_cmd->add_option("--count", opts.count, "Number of images")
      ->capture_default_str();

  CLI::App* sample_cmd =
      add_common(app.add_subcommand("sample", "Draw fresh samples from the "
                                              "prior"));
  sample_cmd->add_option("--prior", opts.prior_path, "Stage-2 checkpoint")
      ->required();
  sample_cmd->add_option("--vq", opts.vq_path, "Stage-1 checkpoint")
      ->required();
  sample_cmd->add_option("--steps", opts.steps, "Unmasking steps");
  sample_cmd->add_option("--count", opts.count, "Number of samples")
      ->capture_default_str();

  CLI::App* masked_cmd =
      add_common(app.add_subcommand("masked-recon", "Hide tokens and let "
                                                    "the prior refill "
                                                    "them"));
  masked_cmd->add_option("--prior", opts.prior_path, "Stage-2 checkpoint")
      ->required();
  masked_cmd->add_option("--vq", opts.vq_path, "Stage-1 checkpoint")
      ->required();
  masked_cmd->add_option("--ratio", opts.ratio, "Fraction of tokens hidden")
      ->capture_default_str();
  masked_cmd
      ->add_option("--mode", opts.mode, "Refill strategy")
      ->check(CLI::IsMember({"top1", "multistep"}))
      ->capture_default_str();
  masked_cmd->add_option("--count", opts.count, "Number of images")
      ->capture_default_str();
  masked_cmd->add_option("--steps", opts.steps, "Unmasking steps");

  CLI::App* eval_cmd =
      add_common(app.add_subcommand("eval", "Metrics over the corpus"));
  eval_cmd->add_option("--vq", opts.vq_path, "Stage-1 checkpoint")
      ->required();
  eval_cmd->add_option("--prior", opts.prior_path,
                       "Optional stage-2 checkpoint");
  eval_cmd->add_option("--count", opts.count, "Number of images");

  CLI::App* experiment_cmd =
      add_common(app.add_subcommand("experiment", "Sweep one ablation "
                                                  "axis"));
  experiment_cmd
      ->add_option("--axis", opts.axis, "Ablation axis")
      ->check(CLI::IsMember({"f0_kind", "codebook_size", "channel_count"}))
      ->required();
  experiment_cmd->add_option("--steps", opts.steps,
                             "Training step budget per variant");

  try {
    app.parse(argc, argv);
    if (train_vq_cmd->parsed()) return cmd_train_vq(opts, train_vq_cmd);
    if (train_prior_cmd->parsed())
      return cmd_train_prior(opts, train_prior_cmd);
    if (reconstruct_cmd->parsed())
      return cmd_reconstruct(opts, reconstruct_cmd);
    if (sample_cmd->parsed()) return cmd_sample(opts, sample_cmd);
    if (masked_cmd->parsed()) return cmd_masked_recon(opts, masked_cmd);
    if (eval_cmd->parsed()) return cmd_eval(opts, eval_cmd);
    if (experiment_cmd->parsed())
      return cmd_experiment(opts, experiment_cmd);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace movq::harness
