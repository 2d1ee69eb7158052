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

#include "movq/harness/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "movq/core/error.hpp"
#include "movq/core/rng.hpp"
#include "movq/nn/checkpoint.hpp"
#include "movq/nn/graph.hpp"
#include "movq/nn/ops.hpp"
#include "movq/nn/optimizer.hpp"
#include "movq/prior/transformer.hpp"
#include "movq/vq/codebook.hpp"

namespace movq::harness {

namespace {

namespace fs = std::filesystem;
using nn::Var;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kMaskStream = std::uint64_t{1} << 33;
constexpr std::uint64_t kSplitStream = (std::uint64_t{1} << 33) + 1;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string step_file(const std::string& out_dir, const char* prefix,
                      std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_step%06lld.movq", prefix,
                static_cast<long long>(step));
  return out_dir + "/" + buf;
}

/// Saves a model checkpoint, then folds the optimizer state and the step
/// counter into the same archive so a resume continues exactly.
void save_training_checkpoint(
    const std::function<void(const std::string&)>& save_model,
    const std::string& path, const nn::Adam& opt, std::int64_t step) {
  save_model(path);
  nn::Checkpoint ck = nn::load_checkpoint(path);
  opt.export_state(&ck);
  ck.config["train.step"] = std::to_string(step);
  nn::save_checkpoint(path, ck);
}

std::int64_t training_step_of(const nn::Checkpoint& ck,
                              const std::string& path) {
  auto it = ck.config.find("train.step");
  if (it == ck.config.end())
    throw ConfigError("resume: '" + path +
                      "' is a bare model checkpoint without a step counter");
  return std::stoll(it->second);
}

void write_diagnostic_dump(const std::string& path, std::int64_t step,
                           const std::vector<std::pair<const char*, double>>&
                               components,
                           const nn::ParamStore& params) {
  std::ofstream out(path);
  out << "step=" << step << "\n";
  for (const auto& [name, v] : components)
    out << name << "=" << format_value(v) << "\n";
  for (const std::string& name : params.names()) {
    const Tensor& value = params.get(name).value();
    double l2 = 0.0;
    for (std::int64_t i = 0; i < value.numel(); ++i)
      l2 += static_cast<double>(value[i]) * value[i];
    out << "param " << name << " l2=" << format_value(std::sqrt(l2)) << "\n";
  }
}

[[noreturn]] void abort_non_finite(const std::string& out_dir, const char* op,
                                   std::int64_t step,
                                   const std::vector<std::pair<const char*,
                                                               double>>&
                                       components,
                                   const nn::ParamStore& params) {
  std::string dump = out_dir + "/diagnostic_dump.txt";
  write_diagnostic_dump(dump, step, components, params);
  throw NumericError(std::string(op) + ": non-finite loss at step " +
                     std::to_string(step) + "; diagnostic dump written to " +
                     dump);
}

Tensor slice_image(const Tensor& batch, int i) {
  Tensor out({batch.dim(1), batch.dim(2), batch.dim(3)});
  std::memcpy(out.data(), batch.data() + i * out.numel(),
              sizeof(float) * out.numel());
  return out;
}

std::vector<int> shuffled_ids(std::vector<int> ids, Rng rng) {
  for (int i = static_cast<int>(ids.size()) - 1; i > 0; --i) {
    int j = rng.below(i + 1);
    std::swap(ids[i], ids[j]);
  }
  return ids;
}

void check_vq_geometry(const ae::AutoencoderConfig& model,
                       const TrainConfig& cfg) {
  auto mismatch = [](const char* field, int have, int want) {
    throw ConfigError(std::string("train_prior: stage-1 checkpoint ") +
                      field + "=" + std::to_string(have) +
                      " does not match the configured " +
                      std::to_string(want));
  };
  if (model.image_size != cfg.image_size)
    mismatch("image_size", model.image_size, cfg.image_size);
  if (model.downsample_factor != cfg.downsample_factor)
    mismatch("downsample_factor", model.downsample_factor,
             cfg.downsample_factor);
  if (model.latent_dim != cfg.latent_dim)
    mismatch("latent_dim", model.latent_dim, cfg.latent_dim);
  if (model.chunks != cfg.chunks) mismatch("chunks", model.chunks, cfg.chunks);
  if (model.codebook_size != cfg.codebook_size)
    mismatch("codebook_size", model.codebook_size, cfg.codebook_size);
}

}  // namespace

std::string format_run_record(const RunRecord& r) {
  std::ostringstream out;
  out << "step=" << r.step
      << " reconstruction=" << format_value(r.reconstruction)
      << " codebook=" << format_value(r.codebook)
      << " commitment=" << format_value(r.commitment)
      << " nll=" << format_value(r.nll) << " psnr=" << format_value(r.psnr)
      << " perplexity=" << format_value(r.perplexity)
      << " wall=" << format_value(r.wall_seconds);
  return out.str();
}

RunLog::RunLog(const std::string& path) : path_(path) {}

void RunLog::append(const RunRecord& record) {
  if (record.step <= last_step_)
    throw ArgumentError("run log: step " + std::to_string(record.step) +
                        " does not advance past " +
                        std::to_string(last_step_));
  std::ofstream out(path_, std::ios::app);
  if (!out) throw FormatError("run log: cannot open " + path_);
  out << format_run_record(record) << "\n";
  last_step_ = record.step;
}

TrainResult train_vq(const TrainConfig& cfg, const std::string& out_dir,
                     const std::string& resume, std::ostream* log,
                     const std::vector<int>* train_ids) {
  validate_train_config(cfg);
  if (cfg.stage != Stage::kVq)
    throw ConfigError("train_vq: configuration stage is not 'vq'");
  Clock::time_point t0 = Clock::now();
  fs::create_directories(out_dir);

  Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed, log);
  std::vector<int> ids =
      train_ids != nullptr ? *train_ids : dataset.all_ids();

  std::optional<ae::Autoencoder> model;
  std::int64_t start = 0;
  if (!resume.empty()) {
    model.emplace(ae::Autoencoder::load(resume));
  } else {
    Rng rng(cfg.seed);
    model.emplace(autoencoder_config(cfg), rng);
  }
  nn::Adam opt(&model->params(), cfg.learning_rate);
  if (!resume.empty()) {
    nn::Checkpoint ck = nn::load_checkpoint(resume);
    start = training_step_of(ck, resume);
    opt.import_state(ck);
  }

  std::optional<ae::PatchDiscriminator> critic;
  std::optional<nn::Adam> critic_opt;
  if (cfg.adversarial) {
    Rng critic_rng = Rng(cfg.seed).child(kMaskStream + 7);
    critic.emplace(cfg.base_width, critic_rng);
    critic_opt.emplace(&critic->params(), cfg.learning_rate);
    std::string critic_path = out_dir + "/critic_state.movq";
    if (!resume.empty() && fs::exists(critic_path)) {
      nn::Checkpoint ck = nn::load_checkpoint(critic_path);
      critic->params().import_arrays(ck.arrays);
      critic_opt->import_state(ck);
    }
  }

  BatchCursor cursor(ids, cfg.batch_size, cfg.seed, start);
  RunLog records(out_dir + "/records.txt");
  TrainResult result;
  auto save_model = [&](const std::string& p) { model->save(p); };

  std::int64_t stop = start + cfg.steps;
  for (std::int64_t step = start; step < stop; ++step) {
    Tensor batch = dataset.stack(cursor.next());
    Var x = Var::leaf(std::move(batch));
    ae::ReconstructResult r = model->reconstruct(x);
    Var total = nn::add(nn::add(r.reconstruction_loss, r.codebook_loss),
                        nn::scale(r.commitment_loss, cfg.beta));
    double adversarial_term = 0.0;
    if (critic) {
      Var generator =
          ae::PatchDiscriminator::generator_loss(critic->score(
              r.reconstruction));
      adversarial_term = generator.value()[0];
      total = nn::add(total, nn::scale(generator, cfg.adversarial_weight));
    }

    std::vector<std::pair<const char*, double>> components = {
        {"reconstruction", r.reconstruction_loss.value()[0]},
        {"codebook", r.codebook_loss.value()[0]},
        {"commitment", r.commitment_loss.value()[0]},
        {"adversarial", adversarial_term},
        {"total", total.value()[0]}};
    for (const auto& [name, v] : components)
      if (!std::isfinite(v))
        abort_non_finite(out_dir, "train_vq", step, components,
                         model->params());

    if (step % cfg.record_every == 0 || step + 1 == stop) {
      RunRecord rec;
      rec.step = step;
      rec.reconstruction = r.reconstruction_loss.value()[0];
      rec.codebook = r.codebook_loss.value()[0];
      rec.commitment = cfg.beta == 0.0f
                           ? 0.0
                           : static_cast<double>(
                                 r.commitment_loss.value()[0]);
      rec.psnr = metrics::psnr(r.reconstruction.value(), x.value());
      rec.perplexity =
          vq::usage_stats(r.indices, cfg.codebook_size).perplexity;
      rec.wall_seconds = seconds_since(t0);
      records.append(rec);
      result.records.push_back(rec);
      if (log != nullptr) *log << format_run_record(rec) << "\n";
    }

    model->params().zero_grad();
    nn::backward(total);
    opt.step();

    if (critic) {
      Var real_scores = critic->score(Var::leaf(x.value()));
      Var fake_scores = critic->score(Var::leaf(r.reconstruction.value()));
      Var critic_loss =
          ae::PatchDiscriminator::critic_loss(real_scores, fake_scores);
      critic->params().zero_grad();
      nn::backward(critic_loss);
      critic_opt->step();
    }

    if ((step + 1) % cfg.checkpoint_every == 0 && step + 1 != stop)
      save_training_checkpoint(save_model, step_file(out_dir, "vq", step + 1),
                               opt, step + 1);
  }

  result.checkpoint_path = out_dir + "/vq_final.movq";
  save_training_checkpoint(save_model, result.checkpoint_path, opt, stop);
  if (critic) {
    std::string critic_path = out_dir + "/critic_state.movq";
    nn::Checkpoint ck;
    ck.config["model"] = "critic";
    ck.config["base_width"] = std::to_string(cfg.base_width);
    critic->params().export_arrays(&ck.arrays);
    critic_opt->export_state(&ck);
    nn::save_checkpoint(critic_path, ck);
  }
  return result;
}

TrainResult train_prior(const TrainConfig& cfg,
                        const std::string& vq_checkpoint,
                        const std::string& out_dir, const std::string& resume,
                        std::ostream* log) {
  validate_train_config(cfg);
  if (cfg.stage == Stage::kVq)
    throw ConfigError("train_prior: configuration stage must be prior_mask "
                      "or prior_auto");
  Clock::time_point t0 = Clock::now();
  fs::create_directories(out_dir);

  ae::Autoencoder vq_model = ae::Autoencoder::load(vq_checkpoint);
  check_vq_geometry(vq_model.config(), cfg);

  Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed, log);
  std::vector<vq::TokenGrid> grids;
  grids.reserve(dataset.size());
  const int tokenize_batch = 16;
  std::vector<int> pending;
  for (int i = 0; i < dataset.size(); ++i) {
    pending.push_back(i);
    if (static_cast<int>(pending.size()) == tokenize_batch ||
        i + 1 == dataset.size()) {
      Var z = vq_model.encode(Var::leaf(dataset.stack(pending)));
      vq::QuantizeResult q = vq::quantize(
          z.value(), vq_model.codebook().value(), cfg.chunks);
      for (auto& g : q.indices) grids.push_back(std::move(g));
      pending.clear();
    }
  }

  std::optional<prior::PriorModel> model;
  std::int64_t start = 0;
  if (!resume.empty()) {
    model.emplace(prior::PriorModel::load(resume));
  } else {
    Rng rng = Rng(cfg.seed).child(1);
    model.emplace(prior_config(cfg), rng);
  }
  nn::Adam opt(&model->params(), cfg.learning_rate);
  if (!resume.empty()) {
    nn::Checkpoint ck = nn::load_checkpoint(resume);
    start = training_step_of(ck, resume);
    opt.import_state(ck);
  }

  std::vector<int> ids(grids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
  BatchCursor cursor(ids, cfg.batch_size, cfg.seed, start);
  Rng mask_rng = Rng(cfg.seed).child(kMaskStream);
  RunLog records(out_dir + "/records.txt");
  TrainResult result;
  auto save_model = [&](const std::string& p) { model->save(p); };
  bool masked = cfg.stage == Stage::kPriorMask;

  std::int64_t stop = start + cfg.steps;
  for (std::int64_t step = start; step < stop; ++step) {
    std::vector<int> batch_ids = cursor.next();
    std::vector<const vq::TokenGrid*> batch(batch_ids.size());
    std::vector<int> class_ids(batch_ids.size(), -1);
    for (std::size_t i = 0; i < batch_ids.size(); ++i)
      batch[i] = &grids[batch_ids[i]];

    Var loss;
    if (masked) {
      std::vector<prior::MaskState> masks;
      masks.reserve(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i)
        masks.push_back(model->sample_training_mask(mask_rng));
      loss = model->masked_nll_batch(batch, masks, class_ids);
    } else {
      loss = model->causal_nll_batch(batch, class_ids);
    }

    double nll = loss.value()[0];
    if (!std::isfinite(nll))
      abort_non_finite(out_dir, "train_prior", step, {{"nll", nll}},
                       model->params());

    if (step % cfg.record_every == 0 || step + 1 == stop) {
      RunRecord rec;
      rec.step = step;
      rec.nll = nll;
      std::vector<vq::TokenGrid> batch_grids;
      for (const auto* g : batch) batch_grids.push_back(*g);
      rec.perplexity =
          vq::usage_stats(batch_grids, cfg.codebook_size).perplexity;
      rec.wall_seconds = seconds_since(t0);
      records.append(rec);
      result.records.push_back(rec);
      if (log != nullptr) *log << format_run_record(rec) << "\n";
    }

    model->params().zero_grad();
    nn::backward(loss);
    opt.step();

    if ((step + 1) % cfg.checkpoint_every == 0 && step + 1 != stop)
      save_training_checkpoint(save_model,
                               step_file(out_dir, "prior", step + 1), opt,
                               step + 1);
  }

  result.checkpoint_path = out_dir + "/prior_final.movq";
  save_training_checkpoint(save_model, result.checkpoint_path, opt, stop);
  return result;
}

metrics::MetricsReport evaluate_reconstruction(ae::Autoencoder* model,
                                               const Dataset& dataset,
                                               const std::vector<int>& ids,
                                               int batch_size) {
  if (model == nullptr) throw ArgumentError("evaluate: null model");
  if (ids.empty()) throw ArgumentError("evaluate: empty id list");
  if (batch_size < 1) throw ArgumentError("evaluate: batch size must be >= 1");
  metrics::MetricsReport report;
  std::vector<vq::TokenGrid> grids;
  bool windowed = dataset.image_size() >= 11;
  for (std::size_t at = 0; at < ids.size(); at += batch_size) {
    std::vector<int> batch_ids(
        ids.begin() + at,
        ids.begin() + std::min(at + batch_size, ids.size()));
    Var x = Var::leaf(dataset.stack(batch_ids));
    ae::ReconstructResult r = model->reconstruct(x);
    for (std::size_t i = 0; i < batch_ids.size(); ++i) {
      Tensor a = slice_image(x.value(), static_cast<int>(i));
      Tensor b = slice_image(r.reconstruction.value(), static_cast<int>(i));
      report.mse += metrics::mse(a, b);
      report.psnr += metrics::psnr(a, b);
      if (windowed) report.ssim += metrics::ssim(a, b);
    }
    for (auto& g : r.indices) grids.push_back(std::move(g));
  }
  double n = static_cast<double>(ids.size());
  report.mse /= n;
  report.psnr /= n;
  report.ssim = windowed ? report.ssim / n : 0.0;
  vq::UsageStats usage =
      vq::usage_stats(grids, model->config().codebook_size);
  report.codebook_usage = usage.usage_fraction;
  report.perplexity = usage.perplexity;
  report.sample_count = static_cast<std::int64_t>(ids.size());
  return report;
}

ExperimentAxis parse_axis(const std::string& name) {
  if (name == "f0_kind") return ExperimentAxis::kInitialFeature;
  if (name == "codebook_size") return ExperimentAxis::kCodebookSize;
  if (name == "channel_count") return ExperimentAxis::kChannelCount;
  throw ConfigError("experiment: unknown axis '" + name +
                    "' (expected f0_kind, codebook_size, or channel_count)");
}

const char* axis_name(ExperimentAxis axis) {
  switch (axis) {
    case ExperimentAxis::kInitialFeature: return "f0_kind";
    case ExperimentAxis::kCodebookSize: return "codebook_size";
    case ExperimentAxis::kChannelCount: return "channel_count";
  }
  return "f0_kind";
}

std::string run_experiment(ExperimentAxis axis, const TrainConfig& cfg,
                           const std::string& out_dir, std::ostream* log) {
  validate_train_config(cfg);
  fs::create_directories(out_dir);
  Dataset dataset(cfg.dataset, cfg.image_size, cfg.seed, log);
  std::vector<int> ids = shuffled_ids(dataset.all_ids(),
                                      Rng(cfg.seed).child(kSplitStream));
  int holdout = std::max(
      1, static_cast<int>(std::lround(ids.size() * cfg.holdout_fraction)));
  if (static_cast<int>(ids.size()) - holdout < 1)
    throw ConfigError("experiment: corpus too small to hold out " +
                      std::to_string(holdout) + " images");
  std::vector<int> train_ids(ids.begin(), ids.end() - holdout);
  std::vector<int> eval_ids(ids.end() - holdout, ids.end());

  struct Variant {
    std::string label;
    TrainConfig cfg;
  };
  std::vector<Variant> variants;
  switch (axis) {
    case ExperimentAxis::kInitialFeature:
      for (const char* kind : {"sinusoid", "learned_constant", "fourier"}) {
        Variant v{kind, cfg};
        v.cfg.initial_feature = kind;
        variants.push_back(std::move(v));
      }
      break;
    case ExperimentAxis::kCodebookSize:
      for (int k : {64, 256, 1024}) {
        Variant v{"K" + std::to_string(k), cfg};
        v.cfg.codebook_size = k;
        variants.push_back(std::move(v));
      }
      break;
    case ExperimentAxis::kChannelCount:
      for (int c : {1, 2, 4, 8}) {
        Variant v{"c" + std::to_string(c), cfg};
        v.cfg.chunks = c;
        variants.push_back(std::move(v));
      }
      break;
  }

  std::ostringstream table;
  table << std::left << std::setw(18) << "variant" << std::right
        << std::setw(12) << "mse" << std::setw(12) << "psnr" << std::setw(12)
        << "ssim" << std::setw(12) << "perplexity" << "\n";
  for (const Variant& variant : variants) {
    validate_train_config(variant.cfg);
    if (log != nullptr)
      *log << "experiment: training variant " << variant.label << "\n";
    std::string sub = out_dir + "/" + variant.label;
    TrainResult tr =
        train_vq(variant.cfg, sub, "", nullptr, &train_ids);
    ae::Autoencoder model = ae::Autoencoder::load(tr.checkpoint_path);
    metrics::MetricsReport report = evaluate_reconstruction(
        &model, dataset, eval_ids,
        std::min<int>(variant.cfg.batch_size,
                      static_cast<int>(eval_ids.size())));
    table << std::left << std::setw(18) << variant.label << std::right
          << std::setw(12) << format_value(report.mse) << std::setw(12)
          << format_value(report.psnr) << std::setw(12)
          << format_value(report.ssim) << std::setw(12)
          << format_value(report.perplexity) << "\n";
  }

  std::string text = table.str();
  std::ofstream out(out_dir + "/report.txt");
  out << text;
  if (log != nullptr) *log << text;
  return text;
}

double compression_ratio(int image_size, int downsample_factor, int chunks) {
  if (image_size < 1 || downsample_factor < 1 || chunks < 1)
    throw ArgumentError("compression_ratio: sizes must be positive");
  if (image_size % downsample_factor != 0)
    throw ArgumentError("compression_ratio: downsample factor must divide "
                        "the image size");
  std::int64_t side = image_size / downsample_factor;
  std::int64_t pixels = 3LL * image_size * image_size;
  std::int64_t tokens = side * side * chunks;
  return static_cast<double>(pixels) / static_cast<double>(tokens);
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("checksum: cannot open " + path);
  std::uint64_t hash = 14695981039346656037ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
    if (!in) break;
  }
  return hash;
}

}  // namespace movq::harness
